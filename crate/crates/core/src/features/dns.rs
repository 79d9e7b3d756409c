//! Just enough DNS to fill the flow's DNS fields: header, first question,
//! and the answer section's record types and TTLs.

const HEADER_LEN: usize = 12;
const TYPE_A: u16 = 1;
const MAX_NAME_LEN: usize = 255;
// A legal name has at most 127 labels, so more jumps than that is a loop.
const MAX_POINTER_HOPS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DnsMessage {
    Query {
        id: u16,
        name: String,
        qtype: u16,
    },
    Response {
        id: u16,
        qtype: Option<u16>,
        /// TTL of the first answer record of type A.
        first_a_ttl: Option<u32>,
    },
}

/// Parses a UDP DNS payload. Any malformation yields `None`.
pub fn parse_dns(payload: &[u8]) -> Option<DnsMessage> {
    if payload.len() < HEADER_LEN {
        return None;
    }
    let id = be16(payload, 0)?;
    let flags = be16(payload, 2)?;
    let qdcount = be16(payload, 4)?;
    let ancount = be16(payload, 6)?;
    let is_response = flags & 0x8000 != 0;

    let mut pos = HEADER_LEN;
    let mut first_question = None;
    for _ in 0..qdcount {
        let (name, next) = read_name(payload, pos)?;
        let qtype = be16(payload, next)?;
        be16(payload, next + 2)?;
        pos = next + 4;
        first_question.get_or_insert((name, qtype));
    }

    if !is_response {
        let (name, qtype) = first_question?;
        return Some(DnsMessage::Query { id, name, qtype });
    }

    let mut first_a_ttl = None;
    for _ in 0..ancount {
        let (_, next) = read_name(payload, pos)?;
        let rtype = be16(payload, next)?;
        let ttl = be32(payload, next + 4)?;
        let rdlength = be16(payload, next + 8)? as usize;
        let end = next + 10 + rdlength;
        if end > payload.len() {
            return None;
        }
        if rtype == TYPE_A && first_a_ttl.is_none() {
            first_a_ttl = Some(ttl);
        }
        pos = end;
    }
    Some(DnsMessage::Response {
        id,
        qtype: first_question.map(|(_, q)| q),
        first_a_ttl,
    })
}

/// Reads a possibly compressed name starting at `start`. Returns the dotted
/// name and the offset just past the name's in-place encoding.
fn read_name(msg: &[u8], start: usize) -> Option<(String, usize)> {
    let mut name = String::new();
    let mut pos = start;
    let mut resume = None;
    let mut hops = 0;
    loop {
        let len = *msg.get(pos)? as usize;
        match len & 0xc0 {
            0x00 => {
                if len == 0 {
                    let after = resume.unwrap_or(pos + 1);
                    return Some((name, after));
                }
                let label = msg.get(pos + 1..pos + 1 + len)?;
                if !name.is_empty() {
                    name.push('.');
                }
                name.extend(label.iter().map(|&b| b as char));
                if name.len() > MAX_NAME_LEN {
                    return None;
                }
                pos += 1 + len;
            }
            0xc0 => {
                let target = (be16(msg, pos)? & 0x3fff) as usize;
                hops += 1;
                if hops > MAX_POINTER_HOPS {
                    return None;
                }
                resume.get_or_insert(pos + 2);
                pos = target;
            }
            // 0x40 and 0x80 label types are obsolete/reserved
            _ => return None,
        }
    }
}

fn be16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_be_bytes(b.get(at..at + 2)?.try_into().ok()?))
}

fn be32(b: &[u8], at: usize) -> Option<u32> {
    Some(u32::from_be_bytes(b.get(at..at + 4)?.try_into().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-encoded messages; the synth encoder is not used here.
    #[rustfmt::skip]
    const QUERY: &[u8] = &[
        0x12, 0x34, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
        7, b'e', b'x', b'a', b'm', b'p', b'l', b'e', 3, b'c', b'o', b'm', 0,
        0x00, 0x01, 0x00, 0x01,
    ];

    fn response(answers: &[(u16, u32, &[u8])]) -> Vec<u8> {
        let mut m = vec![0x12, 0x34, 0x81, 0x80, 0x00, 0x01, 0x00, answers.len() as u8, 0, 0, 0, 0];
        m.extend_from_slice(&QUERY[12..]);
        for (rtype, ttl, rdata) in answers {
            m.extend_from_slice(&[0xc0, 0x0c]);
            m.extend_from_slice(&rtype.to_be_bytes());
            m.extend_from_slice(&[0x00, 0x01]);
            m.extend_from_slice(&ttl.to_be_bytes());
            m.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
            m.extend_from_slice(rdata);
        }
        m
    }

    #[test]
    fn query_id_and_type() {
        assert_eq!(
            parse_dns(QUERY),
            Some(DnsMessage::Query { id: 4660, name: "example.com".into(), qtype: 1 })
        );
    }

    #[test]
    fn first_a_ttl() {
        let msg = response(&[(5, 60, &[0xc0, 0x0c]), (1, 300, &[93, 184, 216, 34]), (1, 9, &[1, 2, 3, 4])]);
        assert_eq!(
            parse_dns(&msg),
            Some(DnsMessage::Response { id: 0x1234, qtype: Some(1), first_a_ttl: Some(300) })
        );
    }

    #[test]
    fn aaaa_only_has_no_a_ttl() {
        let msg = response(&[(28, 300, &[0u8; 16])]);
        assert_eq!(
            parse_dns(&msg),
            Some(DnsMessage::Response { id: 0x1234, qtype: Some(1), first_a_ttl: None })
        );
    }

    #[test]
    fn pointer_loop_is_rejected() {
        let mut msg = QUERY[..12].to_vec();
        // name at offset 12 points to itself
        msg.extend_from_slice(&[0xc0, 0x0c, 0x00, 0x01, 0x00, 0x01]);
        assert_eq!(parse_dns(&msg), None);
        let mut msg = QUERY[..12].to_vec();
        // two pointers pointing at each other
        msg.extend_from_slice(&[0xc0, 0x0e, 0xc0, 0x0c, 0x00, 0x01, 0x00, 0x01]);
        assert_eq!(parse_dns(&msg), None);
    }

    #[test]
    fn truncated_messages_are_rejected() {
        assert_eq!(parse_dns(&QUERY[..11]), None);
        assert_eq!(parse_dns(&QUERY[..QUERY.len() - 1]), None);
        let msg = response(&[(1, 300, &[1, 2, 3, 4])]);
        assert_eq!(parse_dns(&msg[..msg.len() - 2]), None);
    }

    #[test]
    fn query_without_question_is_none() {
        assert_eq!(parse_dns(&[0u8; 12]), None);
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_payloads_never_panic(bytes in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..300)) {
            let _ = parse_dns(&bytes);
        }
    }
}
