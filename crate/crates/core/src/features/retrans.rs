/// Highest sequence boundary seen in one direction of a TCP flow.
///
/// A payload-bearing segment is a retransmission when its whole range
/// `[seq, seq + len)` lies at or below the boundary. Comparisons use
/// serial-number arithmetic modulo 2^32.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SequenceTracker {
    high: Option<u32>,
}

/// `a <= b` in 32-bit serial-number space.
#[inline]
fn serial_le(a: u32, b: u32) -> bool {
    (b.wrapping_sub(a) as i32) >= 0
}

impl SequenceTracker {
    pub fn boundary(&self) -> Option<u32> {
        self.high
    }

    /// Records a segment and reports whether it was a retransmission.
    /// Segments without payload never count and never move the boundary.
    pub fn observe(&mut self, seq: u32, payload_len: u32) -> bool {
        if payload_len == 0 {
            return false;
        }
        let end = seq.wrapping_add(payload_len);
        match self.high {
            None => {
                self.high = Some(end);
                false
            }
            Some(high) => {
                if serial_le(end, high) {
                    true
                } else {
                    self.high = Some(end);
                    false
                }
            }
        }
    }
}
