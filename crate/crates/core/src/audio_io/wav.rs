//! RIFF/WAVE reading and writing for 16-bit little-endian mono PCM.
//!
//! Output files carry the canonical 44-byte header: `RIFF` size `WAVE`, a
//! 16-byte `fmt ` chunk (format 1, channels 1, rate, byte rate, block align 2,
//! 16 bits) and one `data` chunk. Input files may hold extra chunks (`LIST`,
//! `fact`, ...) which are skipped; chunks are word aligned.

use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

const WAVE_FORMAT_PCM: u16 = 1;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::Format(format!("fmt chunk is {} bytes, need 16", body.len())));
    }
    let mut tag = u16_at(body, 0);
    if tag == WAVE_FORMAT_EXTENSIBLE && body.len() >= 26 {
        // sub-format GUID starts with the plain format tag
        tag = u16_at(body, 24);
    }
    if tag != WAVE_FORMAT_PCM {
        return Err(Error::Format(format!(
            "unsupported WAV encoding (format tag {tag:#06x}); only integer PCM is accepted"
        )));
    }
    Ok(Format {
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        bits: u16_at(body, 14),
    })
}

/// Parses a WAV file image.
pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }
    let mut pos = 12;
    let mut format = None;
    let mut data = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "chunk `{}` claims {size} bytes but the file ends early",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => format = Some(parse_fmt(&bytes[body_start..body_end])?),
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        pos = body_end + (size & 1);
    }
    let format = format.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if format.channels != 1 {
        return Err(Error::Format(format!(
            "expected mono audio, file has {} channels",
            format.channels
        )));
    }
    if format.bits != 16 {
        return Err(Error::Format(format!(
            "expected 16-bit PCM, file has {} bits per sample",
            format.bits
        )));
    }
    if format.sample_rate == 0 {
        return Err(Error::Format("sample rate is zero".into()));
    }
    if data.len() % 2 != 0 {
        return Err(Error::Format("data chunk holds a partial sample".into()));
    }
    let pcm: Vec<i16> = data.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
    AudioClip::from_pcm16(&pcm, format.sample_rate)
}

/// Serializes a clip as a canonical 16-bit mono WAV image.
pub fn write_wav_bytes(clip: &AudioClip) -> Vec<u8> {
    let pcm = clip.to_pcm16();
    let data_len = (pcm.len() * 2) as u32;
    let rate = clip.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in pcm {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_wav_bytes(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_wav_bytes(clip)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(channels: u16, bits: u16, samples: &[i16]) -> Vec<u8> {
        let mut b = Vec::new();
        let data_len = (samples.len() * 2) as u32;
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data_len).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&44100u32.to_le_bytes());
        b.extend_from_slice(&(44100 * 2 * channels as u32).to_le_bytes());
        b.extend_from_slice(&(2 * channels).to_le_bytes());
        b.extend_from_slice(&bits.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&data_len.to_le_bytes());
        for s in samples {
            b.extend_from_slice(&s.to_le_bytes());
        }
        b
    }

    #[test]
    fn minimal_file() {
        let bytes = header(1, 16, &[0, 16384, -32768, 32767]);
        assert_eq!(bytes.len(), 44 + 8);
        let clip = read_wav_bytes(&bytes).unwrap();
        assert_eq!(clip.len(), 4);
        assert_eq!(clip.sample_rate(), 44100);
        assert_eq!(clip.samples(), &[0.0, 0.5, -1.0, 32767.0 / 32768.0]);
        assert_eq!(write_wav_bytes(&clip), bytes);
    }

    #[test]
    fn rejects_stereo_and_other_depths() {
        assert!(matches!(read_wav_bytes(&header(2, 16, &[0, 0])), Err(Error::Format(m)) if m.contains("mono")));
        assert!(matches!(read_wav_bytes(&header(1, 24, &[0, 0])), Err(Error::Format(m)) if m.contains("16-bit")));
        assert!(matches!(read_wav_bytes(b"RIFF\0\0\0\0JUNK"), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_truncated_and_float_files() {
        let mut bytes = header(1, 16, &[1, 2, 3]);
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_wav_bytes(&bytes), Err(Error::Format(_))));
        let mut float = header(1, 16, &[1, 2]);
        float[20] = 3;
        assert!(matches!(read_wav_bytes(&float), Err(Error::Format(m)) if m.contains("format tag")));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = header(1, 16, &[7, -7]);
        let mut with_list = plain[..36].to_vec();
        with_list.extend_from_slice(b"LIST");
        with_list.extend_from_slice(&3u32.to_le_bytes());
        with_list.extend_from_slice(b"abc\0");
        with_list.extend_from_slice(&plain[36..]);
        let clip = read_wav_bytes(&with_list).unwrap();
        assert_eq!(clip.to_pcm16(), vec![7, -7]);
    }
}
