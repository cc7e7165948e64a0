use std::io::Write;

use nalgebra::{Vector2, Vector3};

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 27] = [
    "t", "q1", "q2", "qd1", "qd2", "dq1", "dq2", "e1", "e2", "edot1", "edot2", "z1", "z2", "s1", "s2", "tau1",
    "tau2", "taustar1", "taustar2", "that1", "that2", "that3", "psi1", "psi2", "V", "rem1", "rem2",
];

/// One logged sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
    pub qddot: Vector2<f64>,
    pub qd: Vector2<f64>,
    pub qd_vel: Vector2<f64>,
    pub qd_acc: Vector2<f64>,
    pub z: Vector2<f64>,
    pub zdot: Vector2<f64>,
    pub s: Vector2<f64>,
    pub tau: Vector2<f64>,
    pub tau_star: Vector2<f64>,
    pub theta_hat: Vector3<f64>,
    pub theta_hat_dot: Vector3<f64>,
    /// Composite error of the active law.
    pub psi: Vector2<f64>,
    /// Filtered-regressor part `W Δϑ` (or `W* Δϑ`) of the composite error.
    pub w_dtheta: Vector2<f64>,
    pub v: f64,
    pub rem: Option<Vector2<f64>>,
}

impl LogRow {
    /// `Δq = q − q_d`.
    pub fn e(&self) -> Vector2<f64> {
        self.q - self.qd
    }

    pub fn edot(&self) -> Vector2<f64> {
        self.qdot - self.qd_vel
    }

    pub fn eddot(&self) -> Vector2<f64> {
        self.qddot - self.qd_acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    /// Spacing of consecutive rows.
    pub dt: f64,
    pub rows: Vec<LogRow>,
    pub aborted: Option<Abort>,
}

impl SimLog {
    pub fn new(dt: f64) -> Self {
        Self { dt, rows: Vec::new(), aborted: None }
    }

    pub(crate) fn abort(&mut self, t: f64, reason: &str) {
        self.aborted = Some(Abort { t, reason: reason.to_string() });
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    /// Rows with `t0 ≤ t ≤ t1` (with a half-sample tolerance at the ends).
    pub fn window(&self, t0: f64, t1: f64) -> impl Iterator<Item = &LogRow> {
        let eps = 0.5 * self.dt;
        self.rows.iter().filter(move |r| r.t >= t0 - eps && r.t <= t1 + eps)
    }

    /// Root mean square of `‖f(row)‖` over a time window.
    pub fn rms_over<F>(&self, t0: f64, t1: f64, f: F) -> f64
    where
        F: Fn(&LogRow) -> Vector2<f64>,
    {
        let (sum, n) = self.window(t0, t1).fold((0.0, 0usize), |(acc, n), r| (acc + f(r).norm_squared(), n + 1));
        if n == 0 { f64::NAN } else { (sum / n as f64).sqrt() }
    }

    /// Largest component magnitude of `f(row)` over a time window.
    pub fn max_abs_over<F>(&self, t0: f64, t1: f64, f: F) -> f64
    where
        F: Fn(&LogRow) -> Vector2<f64>,
    {
        self.window(t0, t1).map(|r| f(r).amax()).fold(f64::NAN, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record(csv_fields(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_fields(r: &LogRow) -> Vec<String> {
    let e = r.e();
    let edot = r.edot();
    let mut f = Vec::with_capacity(CSV_HEADER.len());
    f.push(num(r.t));
    for v in [r.q, r.qd, r.qdot, e, edot, r.z, r.s, r.tau, r.tau_star] {
        f.push(num(v[0]));
        f.push(num(v[1]));
    }
    f.extend(r.theta_hat.iter().map(|&v| num(v)));
    f.push(num(r.psi[0]));
    f.push(num(r.psi[1]));
    f.push(num(r.v));
    match r.rem {
        Some(rem) => {
            f.push(num(rem[0]));
            f.push(num(rem[1]));
        }
        None => {
            f.push(String::new());
            f.push(String::new());
        }
    }
    f
}
