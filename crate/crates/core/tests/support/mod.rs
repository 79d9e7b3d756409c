#![allow(dead_code)]

pub mod oracle;
pub mod wire;

use std::path::{Path, PathBuf};

use wire::{pcap_bytes, Frame, Resolution};

pub fn write_capture(dir: &Path, name: &str, frames: &[Frame]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, pcap_bytes(frames, Resolution::Micro, false)).unwrap();
    path
}
