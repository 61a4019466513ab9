//! Portable on-disk containers.
//!
//! Spectra and embeddings use a little-endian binary layout (magic, version,
//! dimensions, raw f64 payload) so reloads are bit-exact. Plans use a JSON
//! coordinate-list document; serde_json prints f64 shortest-round-trip, so
//! those reload exactly as well.

use crate::eigenmap::Embedding;
use crate::error::{Error, Result};
use crate::laplace::{LBMethod, LBSpectrum};
use crate::transport::TransportPlan;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const SPECTRUM_MAGIC: &[u8; 4] = b"LBSP";
const EMBEDDING_MAGIC: &[u8; 4] = b"LBEM";
const VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: impl Iterator<Item = f64>) {
        for v in vs {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Self { buf, pos: 0 };
        let got = r.take(4)?;
        if got != magic {
            return Err(Error::Parse(format!(
                "bad magic {:?}, expected {:?}",
                got, magic
            )));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Parse("truncated container".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Parse("bad utf8 in container".into()))
    }
}

/// Encodes `{method, d, l, n, eigenvalues, Phi row-major}`.
pub fn spectrum_to_bytes(spec: &LBSpectrum) -> Vec<u8> {
    let mut w = Writer::new(SPECTRUM_MAGIC);
    w.u8(spec.method().tag());
    w.u32(spec.intrinsic_dim());
    w.u64(spec.sample_count() as u64);
    w.u64(spec.len() as u64);
    w.f64s(spec.eigenvalues().iter().copied());
    let phi = spec.eigenfunctions();
    w.f64s((0..phi.nrows()).flat_map(|i| (0..phi.ncols()).map(move |k| phi[(i, k)])));
    w.buf
}

pub fn spectrum_from_bytes(bytes: &[u8]) -> Result<LBSpectrum> {
    let mut r = Reader::new(bytes, SPECTRUM_MAGIC)?;
    let method = LBMethod::from_tag(r.u8()?)?;
    let d = r.u32()?;
    let l = r.u64()? as usize;
    let n = r.u64()? as usize;
    let mut eigenvalues = Vec::with_capacity(n);
    for _ in 0..n {
        eigenvalues.push(r.f64()?);
    }
    let mut phi = DMatrix::zeros(l, n);
    for i in 0..l {
        for k in 0..n {
            phi[(i, k)] = r.f64()?;
        }
    }
    LBSpectrum::from_parts(eigenvalues, phi, method, d)
}

/// Encodes `{d, l, n, name, P row-major, measure}`.
pub fn embedding_to_bytes(e: &Embedding) -> Vec<u8> {
    let mut w = Writer::new(EMBEDDING_MAGIC);
    w.u32(e.intrinsic_dim());
    w.u64(e.len() as u64);
    w.u64(e.dim() as u64);
    w.str(e.source_name());
    let p = e.coords();
    w.f64s((0..p.nrows()).flat_map(|i| (0..p.ncols()).map(move |k| p[(i, k)])));
    w.f64s(e.measure().iter().copied());
    w.buf
}

pub fn embedding_from_bytes(bytes: &[u8]) -> Result<Embedding> {
    let mut r = Reader::new(bytes, EMBEDDING_MAGIC)?;
    let d = r.u32()?;
    let l = r.u64()? as usize;
    let n = r.u64()? as usize;
    let name = r.str()?;
    let mut p = DMatrix::zeros(l, n);
    for i in 0..l {
        for k in 0..n {
            p[(i, k)] = r.f64()?;
        }
    }
    let mut measure = DVector::zeros(l);
    for i in 0..l {
        measure[i] = r.f64()?;
    }
    Embedding::from_parts(p, measure, d, name)
}

/// JSON document for a transport plan: sparse triples plus both marginals.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanDocument {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub row_marginal: Vec<f64>,
    pub col_marginal: Vec<f64>,
}

pub fn plan_to_json(plan: &TransportPlan) -> String {
    let doc = PlanDocument {
        rows: plan.source_size(),
        cols: plan.target_size(),
        entries: plan.entries().to_vec(),
        row_marginal: plan.row_marginal().iter().copied().collect(),
        col_marginal: plan.col_marginal().iter().copied().collect(),
    };
    serde_json::to_string(&doc).expect("plan serialization cannot fail")
}

pub fn plan_from_json(text: &str) -> Result<TransportPlan> {
    let doc: PlanDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("plan json: {e}")))?;
    if doc.row_marginal.len() != doc.rows || doc.col_marginal.len() != doc.cols {
        return Err(Error::Parse("plan json: inconsistent sizes".into()));
    }
    TransportPlan::new(
        doc.entries,
        DVector::from_vec(doc.row_marginal),
        DVector::from_vec(doc.col_marginal),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape, ShapeKind};
    use crate::laplace::{assemble_cotan, solve_spectrum};

    #[test]
    fn spectrum_round_trip_is_exact() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 42, 3).unwrap();
        let spec = solve_spectrum(&assemble_cotan(&mesh).unwrap(), 6).unwrap();
        let bytes = spectrum_to_bytes(&spec);
        let back = spectrum_from_bytes(&bytes).unwrap();
        assert_eq!(spec.eigenvalues(), back.eigenvalues());
        assert_eq!(spec.eigenfunctions(), back.eigenfunctions());
        assert_eq!(spec.method(), back.method());
        assert_eq!(spec.intrinsic_dim(), back.intrinsic_dim());
    }

    #[test]
    fn embedding_round_trip_is_exact() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 42, 3).unwrap();
        let spec = solve_spectrum(&assemble_cotan(&mesh).unwrap(), 6).unwrap();
        let e = crate::eigenmap::embed(&spec, &mesh, 4).unwrap();
        let back = embedding_from_bytes(&embedding_to_bytes(&e)).unwrap();
        assert_eq!(e.coords(), back.coords());
        assert_eq!(e.measure(), back.measure());
        assert_eq!(e.source_name(), back.source_name());
    }

    #[test]
    fn plan_json_round_trip_is_exact() {
        let mu = DVector::from_vec(vec![0.5, 0.5]);
        let nu = DVector::from_vec(vec![0.25, 0.75]);
        let plan = TransportPlan::new(
            vec![(0, 0, 0.25), (0, 1, 0.25), (1, 1, 0.5)],
            mu,
            nu,
        )
        .unwrap();
        let back = plan_from_json(&plan_to_json(&plan)).unwrap();
        assert_eq!(plan.entries(), back.entries());
        assert_eq!(plan.row_marginal(), back.row_marginal());
    }

    #[test]
    fn corrupt_container_is_a_parse_error() {
        assert!(matches!(
            spectrum_from_bytes(b"nope"),
            Err(Error::Parse(_))
        ));
    }
}
