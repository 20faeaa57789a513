//! Binary model files and loss-trace CSV.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "SPHADC01"
//! kind       u8       0 = fcn, 1 = scnn
//! activation u8       0 = relu, 1 = identity
//! n          u32      then n × u32 fcn_layers
//! n          u32      then n × u32 scnn_channels
//! bandlimit  u32
//! act_bl     u32      scnn_act_bandlimit
//! hidden     u32      readout_hidden
//! count      u64      then count × f64 parameters in layer order
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, ModelKind, ModelSpec, NetworkModel, NnError};

pub const MODEL_MAGIC: &[u8; 8] = b"SPHADC01";

pub fn model_to_bytes(model: &NetworkModel) -> Vec<u8> {
    let spec = model.spec();
    let mut out = Vec::with_capacity(64 + 8 * model.params().len());
    out.extend_from_slice(MODEL_MAGIC);
    out.push(match spec.kind {
        ModelKind::Fcn => 0,
        ModelKind::Scnn => 1,
    });
    out.push(match spec.activation {
        Activation::Relu => 0,
        Activation::Identity => 1,
    });
    for list in [&spec.fcn_layers, &spec.scnn_channels] {
        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
        for &v in list.iter() {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(spec.scnn_bandlimit as u32).to_le_bytes());
    out.extend_from_slice(&(spec.scnn_act_bandlimit as u32).to_le_bytes());
    out.extend_from_slice(&(spec.readout_hidden as u32).to_le_bytes());
    out.extend_from_slice(&(model.params().len() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| NnError::Format("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn list(&mut self) -> Result<Vec<usize>, NnError> {
        let n = self.u32()?;
        if n > 1 << 16 {
            return Err(NnError::Format("implausible layer count".into()));
        }
        (0..n).map(|_| self.u32()).collect()
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<NetworkModel, NnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(NnError::Format("bad magic".into()));
    }
    let kind = match r.u8()? {
        0 => ModelKind::Fcn,
        1 => ModelKind::Scnn,
        k => return Err(NnError::Format(format!("unknown kind {k}"))),
    };
    let activation = match r.u8()? {
        0 => Activation::Relu,
        1 => Activation::Identity,
        a => return Err(NnError::Format(format!("unknown activation {a}"))),
    };
    let fcn_layers = r.list()?;
    let scnn_channels = r.list()?;
    let scnn_bandlimit = r.u32()?;
    let scnn_act_bandlimit = r.u32()?;
    let readout_hidden = r.u32()?;
    let spec = ModelSpec { kind, fcn_layers, scnn_channels, scnn_bandlimit, scnn_act_bandlimit, readout_hidden, activation };
    spec.validate()?;
    let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
    if count != spec.num_params() {
        return Err(NnError::Format(format!("{count} parameters for a spec needing {}", spec.num_params())));
    }
    let raw = r.take(count.checked_mul(8).ok_or_else(|| NnError::Format("overflow".into()))?)?;
    let params = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if r.pos != bytes.len() {
        return Err(NnError::Format("trailing bytes".into()));
    }
    NetworkModel::from_params(spec, params)
}

pub fn write_model(path: &Path, model: &NetworkModel) -> Result<(), NnError> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<NetworkModel, NnError> {
    model_from_bytes(&std::fs::read(path)?)
}

/// `epoch,mse` with epochs counted from 1.
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("epoch,mse\n");
    for (i, v) in trace.iter().enumerate() {
        writeln!(s, "{},{:.17e}", i + 1, v).unwrap();
    }
    s
}

pub fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<(), NnError> {
    std::fs::write(path, loss_trace_csv(trace))?;
    Ok(())
}
