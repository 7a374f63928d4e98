//! Columnar binary container for posterior draws.
//!
//! All integers are little-endian `u64` and all reals little-endian `f64`,
//! written in this order:
//!
//! ```text
//! magic  b"NFDRAWS\0"
//! version                    (currently 1)
//! scheme                     (0 = ffbs, 1 = direct)
//! n, len, draws, dyads, traces, has_paths
//! theta0[3]
//! pairs[dyads][2]            (0-indexed nodes)
//! lambda[draws]
//! theta_last[draws][dyads][3]
//! posterior_mean[dyads][3][len]
//! traces: name_len, name bytes (UTF-8), values[draws]   (repeated)
//! paths[draws][dyads][3][len]                          (if has_paths)
//! ```

use std::io::Read;

use netfuse::mcmc::{PosteriorDraws, Scheme, Trace};
use netfuse::model::{Coef, DyadPaths, ThetaTriple};

use crate::CliError;

const MAGIC: &[u8; 8] = b"NFDRAWS\0";
const VERSION: u64 = 1;

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(d: &PosteriorDraws) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u64(&mut out, VERSION);
    put_u64(&mut out, if d.scheme == Scheme::Direct { 1 } else { 0 });
    for v in [d.n, d.len, d.draws(), d.num_dyads(), d.traces.len(), usize::from(d.paths.is_some())] {
        put_u64(&mut out, v as u64);
    }
    put_f64s(&mut out, &d.theta0.to_array());
    for &(i, j) in &d.pairs {
        put_u64(&mut out, i as u64);
        put_u64(&mut out, j as u64);
    }
    put_f64s(&mut out, &d.lambda);
    put_f64s(&mut out, &d.theta_last);
    for p in &d.posterior_mean {
        for c in Coef::ALL {
            put_f64s(&mut out, p.path(c).free());
        }
    }
    for t in &d.traces {
        put_u64(&mut out, t.name.len() as u64);
        out.extend_from_slice(t.name.as_bytes());
        put_f64s(&mut out, &t.values);
    }
    if let Some(paths) = &d.paths {
        put_f64s(&mut out, paths);
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CliError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| bad("truncated file"))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn count(&mut self) -> Result<usize, CliError> {
        usize::try_from(self.u64()?).map_err(|_| bad("count does not fit in memory"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CliError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| bad("length overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

fn bad(msg: &str) -> CliError {
    CliError::Data(format!("draws file: {msg}"))
}

pub fn decode(buf: &[u8]) -> Result<PosteriorDraws, CliError> {
    let mut c = Cursor { buf, at: 0 };
    if c.take(8)? != MAGIC {
        return Err(bad("not a netfuse draws file"));
    }
    let version = c.u64()?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let scheme = match c.u64()? {
        0 => Scheme::Ffbs,
        1 => Scheme::Direct,
        other => return Err(bad(&format!("unknown scheme code {other}"))),
    };
    let [n, len, draws, dyads, ntraces, has_paths] =
        [c.count()?, c.count()?, c.count()?, c.count()?, c.count()?, c.count()?];
    let t0 = c.f64s(3)?;
    let theta0 = ThetaTriple::new(t0[0], t0[1], t0[2]);
    let mut pairs = Vec::with_capacity(dyads);
    for _ in 0..dyads {
        pairs.push((c.count()?, c.count()?));
    }
    let lambda = c.f64s(draws)?;
    let theta_last = c.f64s(draws * dyads * 3)?;
    let mut posterior_mean = Vec::with_capacity(dyads);
    for _ in 0..dyads {
        let mut p = DyadPaths::constant(theta0, len);
        for coef in Coef::ALL {
            p.path_mut(coef).free_mut().copy_from_slice(&c.f64s(len)?);
        }
        posterior_mean.push(p);
    }
    let mut traces = Vec::with_capacity(ntraces);
    for _ in 0..ntraces {
        let k = c.count()?;
        let name = String::from_utf8(c.take(k)?.to_vec()).map_err(|_| bad("trace name is not UTF-8"))?;
        traces.push(Trace { name, values: c.f64s(draws)? });
    }
    let paths = if has_paths == 1 { Some(c.f64s(draws * dyads * 3 * len)?) } else { None };
    if c.at != buf.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(PosteriorDraws { scheme, n, len, theta0, pairs, lambda, theta_last, posterior_mean, traces, paths })
}

pub fn read<R: Read>(mut r: R) -> Result<PosteriorDraws, CliError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| CliError::Data(format!("cannot read draws: {e}")))?;
    decode(&buf)
}
