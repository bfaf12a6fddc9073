//! On-disk layouts for spectra, feature matrices and frequency samples.
//!
//! CSV files may start with `#` comment lines (the resolved run configuration
//! as one line of JSON); the header row follows. Binary files are little
//! endian:
//!
//! | file | layout |
//! |------|--------|
//! | features | `SRFFEAT1`, `n: u64`, `plus_cols: u64`, `minus_cols: u64`, plus block row-major, minus block row-major (`f64`) |
//! | frequencies | `SRFFREQ1`, `tag_len: u8`, tag bytes, `s: u64`, `d: u64`, vectors row-major, weights (`f64`) |

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use signedrf_core::features::MappedFeatures;
use signedrf_core::linalg::Matrix;
use signedrf_core::radial::RadialSignedMeasure;
use signedrf_core::sampling::{FrequencySample, SampleTag};

use crate::{Error, Result};

pub const FEATURES_MAGIC: &[u8; 8] = b"SRFFEAT1";
pub const FREQUENCIES_MAGIC: &[u8; 8] = b"SRFFREQ1";
pub const SPECTRUM_HEADER: [&str; 3] = ["omega", "density", "sign"];

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic<P, F>(path: P, body: F) -> Result<()>
where
    P: AsRef<Path>,
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn comment(w: &mut dyn Write, text: Option<&str>) -> Result<()> {
    if let Some(text) = text {
        for line in text.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `omega,density,sign` over `grid`.
pub fn write_spectrum_csv(w: &mut dyn Write, mu: &RadialSignedMeasure, grid: &[f64], note: Option<&str>) -> Result<()> {
    comment(w, note)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(SPECTRUM_HEADER)?;
    for &r in grid {
        let f = mu.density(r);
        csv.write_record([format!("{r}"), format!("{f:e}"), sign(f).to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Column names `p0..` for the plus block and `m0..` for the minus block.
pub fn write_features_csv(w: &mut dyn Write, f: &MappedFeatures, note: Option<&str>) -> Result<()> {
    comment(w, note)?;
    let mut csv = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..f.plus_block.cols())
        .map(|j| format!("p{j}"))
        .chain((0..f.minus_block.cols()).map(|j| format!("m{j}")))
        .collect();
    csv.write_record(&header)?;
    for i in 0..f.rows() {
        csv.write_record(f.plus_block.row(i).iter().chain(f.minus_block.row(i)).map(|x| format!("{x:e}")))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(r: R) -> Result<MappedFeatures> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = csv.headers()?.clone();
    let plus = header.iter().take_while(|h| h.starts_with('p')).count();
    if header.iter().skip(plus).any(|h| !h.starts_with('m')) {
        return Err(Error::Format("feature columns must be p* followed by m*".into()));
    }
    let minus = header.len() - plus;
    let (mut p, mut m, mut n) = (Vec::new(), Vec::new(), 0usize);
    for rec in csv.records() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| Error::Format(format!("bad number {field:?}")))?;
            if j < plus {
                p.push(x)
            } else {
                m.push(x)
            }
        }
        n += 1;
    }
    Ok(MappedFeatures { plus_block: Matrix::from_vec(n, plus, p)?, minus_block: Matrix::from_vec(n, minus, m)? })
}

fn put_u64(w: &mut dyn Write, x: usize) -> Result<()> {
    w.write_all(&(x as u64).to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut dyn Write, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Format("size does not fit in memory".into()))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let bytes = n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?;
    let mut buf = Vec::new();
    r.take(bytes as u64).read_to_end(&mut buf)?;
    if buf.len() != bytes {
        return Err(Error::Format(format!("expected {bytes} payload bytes, found {}", buf.len())));
    }
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!("bad magic {m:?}")));
    }
    Ok(())
}

pub fn write_features_binary(w: &mut dyn Write, f: &MappedFeatures) -> Result<()> {
    w.write_all(FEATURES_MAGIC)?;
    put_u64(w, f.rows())?;
    put_u64(w, f.plus_block.cols())?;
    put_u64(w, f.minus_block.cols())?;
    put_f64s(w, f.plus_block.as_slice())?;
    put_f64s(w, f.minus_block.as_slice())
}

pub fn read_features_binary<R: Read>(mut r: R) -> Result<MappedFeatures> {
    expect_magic(&mut r, FEATURES_MAGIC)?;
    let (n, a, b) = (get_u64(&mut r)?, get_u64(&mut r)?, get_u64(&mut r)?);
    let size = |c: usize| n.checked_mul(c).ok_or_else(|| Error::Format("size overflow".into()));
    let plus = get_f64s(&mut r, size(a)?)?;
    let minus = get_f64s(&mut r, size(b)?)?;
    Ok(MappedFeatures { plus_block: Matrix::from_vec(n, a, plus)?, minus_block: Matrix::from_vec(n, b, minus)? })
}

/// One row per frequency: `weight,w0,..,w{d-1}`. The tag goes in a
/// `# tag=<name>` comment ahead of any other note.
pub fn write_sample_csv(w: &mut dyn Write, s: &FrequencySample, note: Option<&str>) -> Result<()> {
    writeln!(w, "# tag={}", s.tag.name())?;
    comment(w, note)?;
    let mut csv = csv::Writer::from_writer(w);
    let header: Vec<String> = std::iter::once("weight".to_string()).chain((0..s.dim()).map(|j| format!("w{j}"))).collect();
    csv.write_record(&header)?;
    for (row, wt) in s.vectors.row_iter().zip(&s.weights) {
        csv.write_record(std::iter::once(wt).chain(row).map(|x| format!("{x:e}")))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_sample_csv(text: &str) -> Result<FrequencySample> {
    let tag = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# tag="))
        .and_then(|t| SampleTag::from_name(t.trim()))
        .ok_or_else(|| Error::Format("missing or unknown '# tag=' line".into()))?;
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let d = csv.headers()?.len().checked_sub(1).ok_or_else(|| Error::Format("empty header".into()))?;
    let (mut vectors, mut weights) = (Vec::new(), Vec::new());
    for rec in csv.records() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| Error::Format(format!("bad number {field:?}")))?;
            if j == 0 {
                weights.push(x)
            } else {
                vectors.push(x)
            }
        }
    }
    let s = weights.len();
    Ok(FrequencySample { vectors: Matrix::from_vec(s, d, vectors)?, weights, tag })
}

pub fn write_sample_binary(w: &mut dyn Write, s: &FrequencySample) -> Result<()> {
    w.write_all(FREQUENCIES_MAGIC)?;
    let tag = s.tag.name().as_bytes();
    w.write_all(&[tag.len() as u8])?;
    w.write_all(tag)?;
    put_u64(w, s.len())?;
    put_u64(w, s.dim())?;
    put_f64s(w, s.vectors.as_slice())?;
    put_f64s(w, &s.weights)
}

pub fn read_sample_binary<R: Read>(mut r: R) -> Result<FrequencySample> {
    expect_magic(&mut r, FREQUENCIES_MAGIC)?;
    let mut len = [0u8; 1];
    r.read_exact(&mut len)?;
    let mut tag = vec![0u8; len[0] as usize];
    r.read_exact(&mut tag)?;
    let tag = std::str::from_utf8(&tag)
        .ok()
        .and_then(SampleTag::from_name)
        .ok_or_else(|| Error::Format("unknown sample tag".into()))?;
    let (s, d) = (get_u64(&mut r)?, get_u64(&mut r)?);
    let vectors = get_f64s(&mut r, s.checked_mul(d).ok_or_else(|| Error::Format("size overflow".into()))?)?;
    let weights = get_f64s(&mut r, s)?;
    Ok(FrequencySample { vectors: Matrix::from_vec(s, d, vectors)?, weights, tag })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features() -> MappedFeatures {
        MappedFeatures {
            plus_block: Matrix::from_vec(2, 2, vec![0.1, -0.2, 1e-310, 3.0]).unwrap(),
            minus_block: Matrix::from_vec(2, 2, vec![0.5, 0.25, -0.0, 7.0]).unwrap(),
        }
    }

    #[test]
    fn features_round_trip() {
        let f = features();
        let mut bin = Vec::new();
        write_features_binary(&mut bin, &f).unwrap();
        assert_eq!(bin.len(), 8 + 24 + 8 * 8);
        assert_eq!(read_features_binary(&bin[..]).unwrap(), f);
        let mut text = Vec::new();
        write_features_csv(&mut text, &f, Some("{\"seed\":1}")).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.starts_with("# {\"seed\":1}\np0,p1,m0,m1\n"));
        assert_eq!(read_features_csv(text.as_bytes()).unwrap(), f);
        assert!(read_features_binary(&bin[..bin.len() - 1]).is_err());
    }

    #[test]
    fn empty_minus_block_round_trips() {
        let f = MappedFeatures { plus_block: Matrix::zeros(3, 4), minus_block: Matrix::zeros(3, 0) };
        let mut text = Vec::new();
        write_features_csv(&mut text, &f, None).unwrap();
        assert_eq!(read_features_csv(&text[..]).unwrap(), f);
    }

    #[test]
    fn samples_round_trip() {
        let s = FrequencySample {
            vectors: Matrix::from_vec(3, 2, vec![1.0, 2.0, -3.5, 0.0, 1e-12, 9.0]).unwrap(),
            weights: vec![1.0, 0.5, 2.25],
            tag: SampleTag::RejectionOmc,
        };
        let mut bin = Vec::new();
        write_sample_binary(&mut bin, &s).unwrap();
        assert_eq!(read_sample_binary(&bin[..]).unwrap(), s);
        let mut text = Vec::new();
        write_sample_csv(&mut text, &s, Some("note")).unwrap();
        assert_eq!(read_sample_csv(std::str::from_utf8(&text).unwrap()).unwrap(), s);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, |w| Ok(w.write_all(b"first")?)).unwrap();
        write_atomic(&path, |w| Ok(w.write_all(b"2")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "2");
        let failed = write_atomic(&path, |_| Err(Error::Config("boom".into())));
        assert!(failed.is_err());
        assert_eq!(fs::read_to_string(&path).unwrap(), "2");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
