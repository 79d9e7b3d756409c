/// Reply code from a server FTP message: three ASCII digits followed by a
/// space (final line) or hyphen (first line of a multi-line reply).
pub fn parse_ftp_response(payload: &[u8]) -> Option<u16> {
    match payload {
        [a, b, c, sep, ..]
            if a.is_ascii_digit()
                && b.is_ascii_digit()
                && c.is_ascii_digit()
                && (*sep == b' ' || *sep == b'-') =>
        {
            Some(((a - b'0') as u16) * 100 + ((b - b'0') as u16) * 10 + (c - b'0') as u16)
        }
        _ => None,
    }
}
