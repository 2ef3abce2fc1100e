//! Binary snapshot of time-indexed fields.
//!
//! Layout (little endian): magic `HLSNAP01`, `u32` dimension, `u32` points per
//! axis, `f64` box length, `u32` node count, `u32` fields per node, then for each
//! node an `f64` time followed by `fields × points^dim` complex samples stored as
//! `(re, im)` `f64` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Grid, GridSpec, SpectralField, C64};
use crate::trajectory::Trajectory;

pub const MAGIC: &[u8; 8] = b"HLSNAP01";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub spec: GridSpec,
    pub fields_per_node: usize,
    pub times: Vec<f64>,
    /// `data[node][field]` samples.
    pub data: Vec<Vec<Vec<C64>>>,
}

impl Snapshot {
    pub fn from_trajectories(trajs: &[&Trajectory]) -> Result<Self> {
        let first = trajs
            .first()
            .ok_or_else(|| LabError::Snapshot("no trajectories".into()))?;
        for t in &trajs[1..] {
            first.check_compatible(t)?;
        }
        let data = (0..first.len())
            .map(|k| trajs.iter().map(|t| t.state(k).values().to_vec()).collect())
            .collect();
        Ok(Snapshot {
            spec: *first.grid().spec(),
            fields_per_node: trajs.len(),
            times: first.times().to_vec(),
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.spec.dim as u32).to_le_bytes())?;
        w.write_all(&(self.spec.points as u32).to_le_bytes())?;
        w.write_all(&self.spec.length.to_le_bytes())?;
        w.write_all(&(self.times.len() as u32).to_le_bytes())?;
        w.write_all(&(self.fields_per_node as u32).to_le_bytes())?;
        for (t, fields) in self.times.iter().zip(&self.data) {
            w.write_all(&t.to_le_bytes())?;
            for f in fields {
                for c in f {
                    w.write_all(&c.re.to_le_bytes())?;
                    w.write_all(&c.im.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(LabError::Snapshot(format!("bad magic {magic:?}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let points = read_u32(&mut r)? as usize;
        let length = read_f64(&mut r)?;
        let spec = GridSpec::new(dim, points, length)
            .map_err(|e| LabError::Snapshot(format!("bad grid header: {e}")))?;
        let nodes = read_u32(&mut r)? as usize;
        let fields = read_u32(&mut r)? as usize;
        let total = spec.total();
        let mut times = Vec::with_capacity(nodes);
        let mut data = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            times.push(read_f64(&mut r)?);
            let mut per = Vec::with_capacity(fields);
            for _ in 0..fields {
                let mut f = Vec::with_capacity(total);
                for _ in 0..total {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    f.push(C64::new(re, im));
                }
                per.push(f);
            }
            data.push(per);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(LabError::Snapshot(format!("{} trailing bytes", rest.len())));
        }
        Ok(Snapshot {
            spec,
            fields_per_node: fields,
            times,
            data,
        })
    }

    /// Field 0 at `node` on a grid matching the header.
    pub fn field(&self, grid: &Arc<Grid>, node: usize) -> Result<SpectralField> {
        if grid.spec() != &self.spec {
            return Err(LabError::Snapshot(format!(
                "snapshot grid {:?} differs from {:?}",
                self.spec,
                grid.spec()
            )));
        }
        let fields = self
            .data
            .get(node)
            .ok_or_else(|| LabError::Snapshot(format!("node {node} out of range")))?;
        SpectralField::from_values(grid, fields[0].clone())
    }

    /// Field `index` across all nodes as a trajectory.
    pub fn trajectory(&self, grid: &Arc<Grid>, index: usize) -> Result<Trajectory> {
        if index >= self.fields_per_node {
            return Err(LabError::Snapshot(format!("field {index} out of range")));
        }
        let states = self
            .data
            .iter()
            .map(|f| SpectralField::from_values(grid, f[index].clone()))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.times.clone(), states)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| LabError::Snapshot(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| LabError::Snapshot(format!("truncated data: {e}")))?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let g = Grid::new(GridSpec::new(2, 8, 5.0).unwrap()).unwrap();
        let a = SpectralField::from_fn(&g, |x| C64::new(x[0], x[1]));
        let b = a.scale(2.0);
        let tr = Trajectory::new(vec![0.1, 0.2], vec![a.clone(), b]).unwrap();
        let snap = Snapshot::from_trajectories(&[&tr]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.snap");
        snap.write(&p).unwrap();
        let back = Snapshot::read(&p).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.field(&g, 0).unwrap().values(), a.values());

        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&p, &bytes).unwrap();
        assert!(Snapshot::read(&p).is_err());
        std::fs::write(&p, b"NOTASNAPxxxxxxxx").unwrap();
        assert!(Snapshot::read(&p).is_err());
    }
}
