//! Binary checkpoints built from tensor records (see [`crate::tensor::write_record`]).
//!
//! Every file starts with an 8-byte magic tag. Scalars are little-endian
//! `u64` / `f64`.

use crate::ctmrg::Environment;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionState, TrajectoryRecord};
use crate::finite::{CorrelatorRow, FiniteLattice, FiniteState};
use crate::peps::{PepsTensor, TransferTensor};
use crate::renorm::Isometry;
use crate::tensor::record::{read_f64, read_u64};
use crate::tensor::{read_record, write_record, Tensor};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const EVOLUTION_MAGIC: &[u8; 8] = b"TPEPSEV1";
const ENV_MAGIC: &[u8; 8] = b"TPEPSEN1";
const FINITE_MAGIC: &[u8; 8] = b"TPEPSFL1";

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(Error::Checkpoint(format!(
            "expected tag {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&buf)
        )));
    }
    Ok(())
}

fn put_vec<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    put_u64(w, v.len() as u64)?;
    for &x in v {
        put_f64(w, x)?;
    }
    Ok(())
}

fn bad(e: Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn save_with<F: FnOnce(&mut BufWriter<File>) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    // write-then-rename so a crash never leaves a torn checkpoint
    let tmp = path.with_extension("partial");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn get_vec<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = read_u64(r)?;
    if n > 1 << 24 {
        return Err(Error::Checkpoint(format!("implausible vector length {n}")));
    }
    (0..n).map(|_| read_f64(r)).collect()
}

/// SHA-256 of a tensor's record bytes.
pub fn tensor_hash(t: &Tensor) -> [u8; 32] {
    let mut bytes = Vec::with_capacity(8 * (t.len() + t.rank() + 1));
    write_record(&mut bytes, t).expect("writing to memory");
    Sha256::digest(&bytes).into()
}

fn write_env<W: Write>(w: &mut W, env: &Environment) -> Result<()> {
    write_record(w, env.corner())?;
    write_record(w, env.top())?;
    put_vec(w, env.spectrum())?;
    put_u64(w, env.is_converged() as u64)?;
    put_u64(w, env.degenerate_cuts() as u64)
}

fn read_env<R: Read>(r: &mut R) -> Result<Environment> {
    let c = read_record(r)?;
    let t = read_record(r)?;
    let spectrum = get_vec(r)?;
    let converged = read_u64(r)? != 0;
    let cuts = read_u64(r)? as usize;
    Environment::restore(c, t, spectrum, converged, cuts)
}

/// Writes `env` with the hash of the transfer tensor it was converged for.
pub fn write_environment<W: Write>(w: &mut W, env: &Environment, source: &TransferTensor) -> Result<()> {
    w.write_all(ENV_MAGIC)?;
    put_u64(w, env.m() as u64)?;
    w.write_all(&tensor_hash(source.tensor()))?;
    write_env(w, env)
}

/// Reads an environment; with `source` given, its hash must match.
pub fn read_environment<R: Read>(r: &mut R, source: Option<&TransferTensor>) -> Result<Environment> {
    expect_magic(r, ENV_MAGIC)?;
    let m = read_u64(r)? as usize;
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    if let Some(s) = source {
        if tensor_hash(s.tensor()) != hash {
            return Err(Error::Checkpoint(
                "environment was converged for a different tensor".into(),
            ));
        }
    }
    let env = read_env(r)?;
    if env.m() != m {
        return Err(Error::Checkpoint(format!("header says M={m}, corner has {}", env.m())));
    }
    Ok(env)
}

/// Resumable snapshot of an infinite-lattice trajectory.
#[derive(Clone, Debug)]
pub struct EvolutionCheckpoint {
    pub h: f64,
    pub delta: f64,
    /// Target bond dimension of the run.
    pub d: usize,
    pub state: EvolutionState,
    pub trajectory: Vec<TrajectoryRecord>,
}

impl EvolutionCheckpoint {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let a = self.state.a.tensor();
        w.write_all(EVOLUTION_MAGIC)?;
        put_u64(w, self.state.step as u64)?;
        put_f64(w, self.state.beta)?;
        put_f64(w, self.h)?;
        put_f64(w, self.delta)?;
        put_u64(w, self.d as u64)?;
        put_u64(w, self.state.a.bond_dim() as u64)?;
        put_u64(w, a.dim(0) as u64)?;
        write_record(w, a)?;
        write_env(w, &self.state.env)?;
        match &self.state.w {
            Some(iso) => {
                put_u64(w, 1)?;
                write_record(w, iso.matrix())?;
            }
            None => put_u64(w, 0)?,
        }
        put_u64(w, self.trajectory.len() as u64)?;
        for r in &self.trajectory {
            put_f64(w, r.beta)?;
            put_f64(w, r.z)?;
            put_f64(w, r.x)?;
            put_f64(w, r.merit)?;
            put_u64(w, r.env_iters as u64)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, EVOLUTION_MAGIC)?;
        let step = read_u64(r)? as usize;
        let beta = read_f64(r)?;
        let h = read_f64(r)?;
        let delta = read_f64(r)?;
        let d = read_u64(r)? as usize;
        let d_now = read_u64(r)? as usize;
        let s = read_u64(r)? as usize;
        let a = PepsTensor::new(read_record(r)?).map_err(bad)?;
        if a.bond_dim() != d_now || a.tensor().dim(0) != s {
            return Err(Error::Checkpoint("site tensor does not match its header".into()));
        }
        let env = read_env(r)?;
        let w = match read_u64(r)? {
            0 => None,
            1 => Some(Isometry::new(read_record(r)?).map_err(bad)?),
            f => return Err(Error::Checkpoint(format!("bad isometry flag {f}"))),
        };
        let n = read_u64(r)?;
        if n > 1 << 32 {
            return Err(Error::Checkpoint(format!("implausible trajectory length {n}")));
        }
        let mut trajectory = Vec::with_capacity(n as usize);
        for _ in 0..n {
            trajectory.push(TrajectoryRecord {
                beta: read_f64(r)?,
                z: read_f64(r)?,
                x: read_f64(r)?,
                merit: read_f64(r)?,
                env_iters: read_u64(r)? as usize,
            });
        }
        Ok(EvolutionCheckpoint {
            h,
            delta,
            d,
            state: EvolutionState { step, beta, a, env, w },
            trajectory,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}

/// Resumable snapshot of a finite-lattice trajectory: side, site tensors
/// (row-major), per-bond isometries and the correlators recorded so far.
#[derive(Clone, Debug)]
pub struct FiniteCheckpoint {
    pub h: f64,
    pub delta: f64,
    pub d: usize,
    pub state: FiniteState,
    pub rows: Vec<CorrelatorRow>,
}

impl FiniteCheckpoint {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let lat = &self.state.lattice;
        w.write_all(FINITE_MAGIC)?;
        put_u64(w, self.state.step as u64)?;
        put_f64(w, self.state.beta)?;
        put_f64(w, self.h)?;
        put_f64(w, self.delta)?;
        put_u64(w, self.d as u64)?;
        put_u64(w, lat.n() as u64)?;
        put_u64(w, lat.m_mps() as u64)?;
        for a in lat.sites() {
            write_record(w, a.tensor())?;
        }
        put_u64(w, lat.isometries().len() as u64)?;
        for iso in lat.isometries() {
            write_record(w, iso.matrix())?;
        }
        put_u64(w, self.rows.len() as u64)?;
        for r in &self.rows {
            put_f64(w, r.beta)?;
            for x in [r.site1.0, r.site1.1, r.site2.0, r.site2.1] {
                put_u64(w, x as u64)?;
            }
            put_f64(w, r.value)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        expect_magic(r, FINITE_MAGIC)?;
        let step = read_u64(r)? as usize;
        let beta = read_f64(r)?;
        let h = read_f64(r)?;
        let delta = read_f64(r)?;
        let d = read_u64(r)? as usize;
        let n = read_u64(r)? as usize;
        let m_mps = read_u64(r)? as usize;
        if n == 0 || n > 1 << 10 {
            return Err(Error::Checkpoint(format!("implausible lattice side {n}")));
        }
        let sites = (0..n * n)
            .map(|_| PepsTensor::new(read_record(r)?).map_err(bad))
            .collect::<Result<Vec<_>>>()?;
        let nb = read_u64(r)? as usize;
        if nb != 2 * n * (n - 1) {
            return Err(Error::Checkpoint(format!("{nb} isometries for a {n}x{n} lattice")));
        }
        let isometries = (0..nb)
            .map(|_| Isometry::new(read_record(r)?).map_err(bad))
            .collect::<Result<Vec<_>>>()?;
        let lattice = FiniteLattice::from_parts(n, sites, isometries, m_mps).map_err(bad)?;
        let count = read_u64(r)?;
        if count > 1 << 32 {
            return Err(Error::Checkpoint(format!("implausible row count {count}")));
        }
        let mut rows = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let beta = read_f64(r)?;
            let mut ix = [0usize; 4];
            for x in &mut ix {
                *x = read_u64(r)? as usize;
            }
            rows.push(CorrelatorRow {
                beta,
                site1: (ix[0], ix[1]),
                site2: (ix[2], ix[3]),
                value: read_f64(r)?,
            });
        }
        Ok(FiniteCheckpoint {
            h,
            delta,
            d,
            state: FiniteState { step, beta, lattice },
            rows,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_with(path, |w| self.write(w))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}
