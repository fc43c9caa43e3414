//! "PSG v1" grid files.
//!
//! Layout: ASCII header lines `PSG 1`, `rows <int>`, `cols <int>`,
//! `channels <int>`, `data binary-f64-le`, an empty line, then
//! `rows * cols * channels` little-endian f64 values in row-major order with
//! channels interleaved. Masks are stored as separate 1-channel files holding
//! 0.0 / 1.0.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Channels, PixelGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct PsgData {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PsgData {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let expected = self.rows * self.cols * self.channels;
        if self.data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.data.len(),
            });
        }
        let mut out = Vec::with_capacity(64 + 8 * expected);
        write!(
            out,
            "PSG 1\nrows {}\ncols {}\nchannels {}\ndata binary-f64-le\n\n",
            self.rows, self.cols, self.channels
        )?;
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| Error::Format("truncated PSG header".into()))?;
        let header =
            std::str::from_utf8(&bytes[..split]).map_err(|_| Error::Format("PSG header is not ASCII".into()))?;
        let payload = &bytes[split + 2..];
        let mut lines = header.lines();
        let mut line = || lines.next().ok_or_else(|| Error::Format("truncated PSG header".into()));
        if line()? != "PSG 1" {
            return Err(Error::Format("missing `PSG 1` magic line".into()));
        }
        let mut field = |name: &str| -> Result<usize> {
            let l = line()?;
            let value = l
                .strip_prefix(name)
                .and_then(|s| s.strip_prefix(' '))
                .ok_or_else(|| Error::Format(format!("expected `{name} <int>`, got `{l}`")))?;
            value
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad {name} value `{value}`")))
        };
        let rows = field("rows")?;
        let cols = field("cols")?;
        let channels = field("channels")?;
        if line()? != "data binary-f64-le" {
            return Err(Error::Format("unsupported PSG data encoding".into()));
        }
        if line().is_ok() {
            return Err(Error::Format("unexpected extra PSG header line".into()));
        }
        let expected = rows * cols * channels;
        if payload.len() != expected * 8 {
            return Err(Error::Format(format!(
                "PSG payload holds {} bytes, header declares {}",
                payload.len(),
                expected * 8
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

/// Grid values as PSG; unmasked pixels are written as zeros.
pub fn grid_to_psg<T: Channels>(grid: &PixelGrid<T>) -> PsgData {
    let mut data = Vec::with_capacity(grid.rows() * grid.cols() * T::COUNT);
    for (v, &m) in grid.values().iter().zip(grid.mask()) {
        if m {
            v.write_channels(&mut data);
        } else {
            T::zero().write_channels(&mut data);
        }
    }
    PsgData {
        rows: grid.rows(),
        cols: grid.cols(),
        channels: T::COUNT,
        data,
    }
}

pub fn mask_to_psg(rows: usize, cols: usize, mask: &[bool]) -> PsgData {
    PsgData {
        rows,
        cols,
        channels: 1,
        data: mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    }
}

pub fn psg_to_mask(psg: &PsgData) -> Result<Vec<bool>> {
    if psg.channels != 1 {
        return Err(Error::Format(format!("mask must have 1 channel, got {}", psg.channels)));
    }
    Ok(psg.data.iter().map(|&v| v > 0.5).collect())
}

pub fn psg_to_grid<T: Channels>(psg: &PsgData, mask: &[bool]) -> Result<PixelGrid<T>> {
    if psg.channels != T::COUNT {
        return Err(Error::DimensionMismatch {
            expected: T::COUNT,
            found: psg.channels,
        });
    }
    let values = psg.data.chunks_exact(T::COUNT).map(T::read_channels).collect();
    PixelGrid::new(psg.rows, psg.cols, mask.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn header_layout_is_exact() {
        let psg = PsgData {
            rows: 1,
            cols: 2,
            channels: 1,
            data: vec![1.0, -2.5],
        };
        let bytes = psg.encode().unwrap();
        let header = b"PSG 1\nrows 1\ncols 2\nchannels 1\ndata binary-f64-le\n\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..header.len() + 8], &1.0f64.to_le_bytes());
        assert_eq!(bytes.len(), header.len() + 16);
        assert_eq!(PsgData::decode(&bytes).unwrap(), psg);
    }

    #[test]
    fn rejects_truncated_payload() {
        let psg = PsgData {
            rows: 2,
            cols: 2,
            channels: 1,
            data: vec![0.0; 4],
        };
        let mut bytes = psg.encode().unwrap();
        bytes.pop();
        assert!(PsgData::decode(&bytes).is_err());
        assert!(PsgData::decode(b"PSG 2\n").is_err());
    }

    #[test]
    fn multichannel_grid_round_trip() {
        let mut g = PixelGrid::from_fn(3, 2, |r, c| Vector3::new(r as f64, c as f64, -1.0));
        g = g.with_mask(vec![true, true, false, true, true, true]).unwrap();
        let psg = grid_to_psg(&g);
        assert_eq!(psg.channels, 3);
        let back: PixelGrid<Vector3<f64>> = psg_to_grid(&psg, g.mask()).unwrap();
        for i in g.masked_indices() {
            assert_eq!(back.values()[i], g.values()[i]);
        }
        assert_eq!(back.values()[2], Vector3::zeros());
        let m = mask_to_psg(3, 2, g.mask());
        assert_eq!(psg_to_mask(&m).unwrap(), g.mask());
    }
}
