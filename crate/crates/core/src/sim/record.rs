//! Per-tick telemetry and CSV output.

use std::io::{self, Write};

use crate::geom::{EulerAngles, Vec3};

/// One telemetry row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimRecord {
    pub t: f64,
    pub p_d: Vec3,
    pub p: Vec3,
    pub v_d: Vec3,
    pub v: Vec3,
    pub eta_d: EulerAngles,
    pub eta: EulerAngles,
    /// Commanded total thrust after allocation, N.
    pub thrust: f64,
    /// Net commanded body torque after allocation, N·m.
    pub torque: Vec3,
    /// True thrust shortfall along body z, N.
    pub delta_f_true: f64,
    pub delta_f_hat: f64,
    pub force_hat: Vec3,
    pub tau_dis_true: Vec3,
    pub tau_dis_hat: Vec3,
    pub saturated: bool,
}

pub const CSV_HEADER: &str = "t,pd_x,pd_y,pd_z,p_x,p_y,p_z,vd_x,vd_y,vd_z,v_x,v_y,v_z,\
roll_d,pitch_d,yaw_d,roll,pitch,yaw,f,tau_x,tau_y,tau_z,delta_f_true,delta_f_hat,\
dF_hat_x,dF_hat_y,dF_hat_z,tau_dis_x,tau_dis_y,tau_dis_z,tau_dis_hat_x,tau_dis_hat_y,tau_dis_hat_z,saturated";

impl SimRecord {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let mut fields: Vec<f64> = Vec::with_capacity(34);
        fields.push(self.t);
        for v in [&self.p_d, &self.p, &self.v_d, &self.v] {
            fields.extend(v.iter());
        }
        for e in [&self.eta_d, &self.eta] {
            fields.extend([e.roll, e.pitch, e.yaw]);
        }
        fields.push(self.thrust);
        fields.extend(self.torque.iter());
        fields.push(self.delta_f_true);
        fields.push(self.delta_f_hat);
        for v in [&self.force_hat, &self.tau_dis_true, &self.tau_dis_hat] {
            fields.extend(v.iter());
        }
        for x in fields {
            // `{}` on f64 is the shortest round-trip form, locale independent
            write!(w, "{x},")?;
        }
        writeln!(w, "{}", u8::from(self.saturated))
    }

    /// Altitude error `e_z = z_d − z`.
    pub fn e_z(&self) -> f64 {
        self.p_d.z - self.p.z
    }
}

/// Destination for telemetry rows.
pub trait RecordSink {
    fn accept(&mut self, rec: &SimRecord) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl RecordSink for Vec<SimRecord> {
    fn accept(&mut self, rec: &SimRecord) -> io::Result<()> {
        self.push(*rec);
        Ok(())
    }
}

/// Discards every row.
#[derive(Debug, Default)]
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _rec: &SimRecord) -> io::Result<()> {
        Ok(())
    }
}

/// Writes the header on construction and one line per record.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn accept(&mut self, rec: &SimRecord) -> io::Result<()> {
        rec.write_csv(&mut self.out)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}
