//! Per-day value and policy tables, stored row-major over `(x, y, c)`, with
//! a small self-describing little-endian binary format.
//!
//! Layout: magic `H2ST`, format version, table kind, periods, `nx`, `nc`,
//! the four grid steps, `du`, the inventory and price grids, the net
//! production support of every day, then every day's cells as `f64`.

use std::io::{Read, Write};

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::{GridResolution, Grids, YSupport};

const MAGIC: &[u8; 4] = b"H2ST";
const VERSION: u32 = 1;
const KIND_VALUES: u32 = 0;
const KIND_POLICY: u32 = 1;

#[derive(Debug, Clone)]
pub struct ValueTable {
    pub grids: Grids,
    pub days: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PolicyTable {
    pub grids: Grids,
    /// Optimal actions as multiples of `grids.du`.
    pub steps: Vec<Vec<i16>>,
}

fn locate(grids: &Grids, state: &State) -> Result<(usize, usize, usize)> {
    let off = |what: &str, v: f64| Error::OffGrid(format!("{what} {v} of day {} is not a grid point", state.day + 1));
    if state.day >= grids.periods() {
        return Err(Error::OffGrid(format!("day index {} beyond {} periods", state.day, grids.periods())));
    }
    let xi = grids.x_index(state.x).ok_or_else(|| off("inventory", state.x))?;
    let yi = grids.y_index(state.day, state.y_bar).ok_or_else(|| off("net production", state.y_bar))?;
    let ci = grids.c_index(state.c).ok_or_else(|| off("price", state.c))?;
    Ok((xi, yi, ci))
}

impl ValueTable {
    pub fn zeros(grids: &Grids) -> Self {
        ValueTable {
            grids: grids.clone(),
            days: (0..grids.periods()).map(|d| vec![0.0; grids.day_len(d)]).collect(),
        }
    }

    pub fn get(&self, day: usize, xi: usize, yi: usize, ci: usize) -> f64 {
        self.days[day][self.grids.cell(day, xi, yi, ci)]
    }

    pub fn value_at(&self, state: &State) -> Result<f64> {
        let (xi, yi, ci) = locate(&self.grids, state)?;
        Ok(self.get(state.day, xi, yi, ci))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, &self.grids, KIND_VALUES)?;
        for day in &self.days {
            for v in day {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

impl PolicyTable {
    pub fn zeros(grids: &Grids) -> Self {
        PolicyTable {
            grids: grids.clone(),
            steps: (0..grids.periods()).map(|d| vec![0; grids.day_len(d)]).collect(),
        }
    }

    #[inline]
    pub fn step(&self, day: usize, xi: usize, yi: usize, ci: usize) -> i16 {
        self.steps[day][self.grids.cell(day, xi, yi, ci)]
    }

    #[inline]
    pub fn get(&self, day: usize, xi: usize, yi: usize, ci: usize) -> f64 {
        self.step(day, xi, yi, ci) as f64 * self.grids.du
    }

    /// The optimal action at a state given by values. Fails with
    /// [`Error::OffGrid`] unless every coordinate is a grid point.
    pub fn action_at(&self, state: &State) -> Result<f64> {
        let (xi, yi, ci) = locate(&self.grids, state)?;
        Ok(self.get(state.day, xi, yi, ci))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, &self.grids, KIND_POLICY)?;
        let du = self.grids.du;
        for day in &self.steps {
            for &k in day {
                w.write_all(&(k as f64 * du).to_le_bytes())?;
            }
        }
        Ok(())
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W, grids: &Grids, kind: u32) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, kind)?;
    put_u32(w, grids.periods() as u32)?;
    put_u32(w, grids.nx() as u32)?;
    put_u32(w, grids.nc() as u32)?;
    let r = &grids.resolution;
    for v in [r.dx, r.dc, r.c_max, r.dj, grids.du] {
        put_f64(w, v)?;
    }
    for &v in grids.x.iter().chain(&grids.c) {
        put_f64(w, v)?;
    }
    for s in &grids.y {
        w.write_all(&s.k_min.to_le_bytes())?;
        w.write_all(&s.k_max.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::TableFormat(format!("truncated table: {e}")))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

fn read_header<R: Read>(r: &mut Reader<R>, expected_kind: u32) -> Result<Grids> {
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::TableFormat("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::TableFormat(format!("unsupported format version {version}")));
    }
    let kind = r.u32()?;
    if kind != expected_kind {
        return Err(Error::TableFormat(format!("table kind {kind}, expected {expected_kind}")));
    }
    let periods = r.u32()? as usize;
    let nx = r.u32()? as usize;
    let nc = r.u32()? as usize;
    if periods == 0 || nx == 0 || nc == 0 || periods > 100_000 || nx > 10_000_000 || nc > 10_000_000 {
        return Err(Error::TableFormat(format!("implausible dimensions {periods}x{nx}x{nc}")));
    }
    let resolution = GridResolution {
        dx: r.f64()?,
        dc: r.f64()?,
        c_max: r.f64()?,
        dj: r.f64()?,
    };
    let du = r.f64()?;
    let x = (0..nx).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let c = (0..nc).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mut y = Vec::with_capacity(periods);
    for day in 0..periods {
        let s = YSupport {
            k_min: r.i64()?,
            k_max: r.i64()?,
        };
        if s.k_max < s.k_min || s.k_max - s.k_min > 10_000_000 {
            return Err(Error::TableFormat(format!("bad support for day {}", day + 1)));
        }
        y.push(s);
    }
    Ok(Grids {
        resolution,
        du,
        x,
        c,
        y,
    })
}

fn read_body<R: Read>(r: &mut Reader<R>, grids: &Grids) -> Result<Vec<Vec<f64>>> {
    let mut days = Vec::with_capacity(grids.periods());
    for day in 0..grids.periods() {
        days.push((0..grids.day_len(day)).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(Error::TableFormat("trailing bytes after table".into()));
    }
    Ok(days)
}

pub fn read_values<R: Read>(reader: R) -> Result<ValueTable> {
    let mut r = Reader { inner: reader };
    let grids = read_header(&mut r, KIND_VALUES)?;
    let days = read_body(&mut r, &grids)?;
    Ok(ValueTable { grids, days })
}

pub fn read_policy<R: Read>(reader: R) -> Result<PolicyTable> {
    let mut r = Reader { inner: reader };
    let grids = read_header(&mut r, KIND_POLICY)?;
    let du = grids.du;
    let steps = read_body(&mut r, &grids)?
        .into_iter()
        .map(|day| {
            day.into_iter()
                .map(|u| {
                    let k = (u / du).round();
                    if (k * du - u).abs() > 1e-9 * du.max(1.0) || k.abs() > i16::MAX as f64 {
                        Err(Error::TableFormat(format!("action {u} is not on the action lattice")))
                    } else {
                        Ok(k as i16)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyTable { grids, steps })
}
