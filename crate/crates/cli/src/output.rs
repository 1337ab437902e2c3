use crate::doc::Outputs;

const SIGNIFICANT: i32 = 12;

/// `%.12g`: twelve significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 ..< 1e12`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent formatting has an e");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= SIGNIFICANT {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_g(v)).collect());
    }

    /// RFC-4180: CRLF line ends, quoting only where needed.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
    }
}

/// Flat table of the outputs; grids are row-major with explicit axis columns.
pub fn table(outputs: &Outputs) -> Table {
    match outputs {
        Outputs::State { mean, cov, detected } => {
            let mut t = Table::new(&["quantity", "i", "j", "value"]);
            for (i, m) in mean.iter().enumerate() {
                t.push(vec!["mean".into(), i.to_string(), String::new(), fmt_g(*m)]);
            }
            for (i, row) in cov.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    t.push(vec!["cov".into(), i.to_string(), j.to_string(), fmt_g(*c)]);
                }
            }
            for (name, v) in [
                ("detected_theta", detected.theta),
                ("detected_mean", detected.mean),
                ("detected_variance", detected.variance),
            ] {
                t.push(vec![name.into(), String::new(), String::new(), fmt_g(v)]);
            }
            t
        }
        Outputs::Report {
            engine,
            closed,
            snr_gain_db,
        } => {
            let mut header = vec!["detected_mode", "mean_x2", "var_x2", "snr", "phase_variance"];
            let mut row = vec![
                engine.detected_mode.to_string(),
                fmt_g(engine.mean_x2),
                fmt_g(engine.var_x2),
                fmt_g(engine.snr),
                fmt_g(engine.phase_variance),
            ];
            if let Some(c) = closed {
                header.extend(["snr_closed", "phase_variance_closed"]);
                row.extend([fmt_g(c.snr), fmt_g(c.phase_variance)]);
            }
            if let Some(gain) = snr_gain_db {
                header.push("snr_gain_db");
                row.push(fmt_g(*gain));
            }
            let mut t = Table::new(&header);
            t.push(row);
            t
        }
        Outputs::Grid(grid) => {
            let mut t = Table::new(&[&grid.y_axis.name, &grid.x_axis.name, "advantage_db"]);
            let xs = grid.x_axis.range.values();
            for (r, y) in grid.y_axis.range.values().into_iter().enumerate() {
                for (c, &x) in xs.iter().enumerate() {
                    t.numbers(&[y, x, grid.get(r, c)]);
                }
            }
            t
        }
        Outputs::Slope { points } => {
            let mut t = Table::new(&["theta", "slope"]);
            for p in points {
                t.numbers(&[p.theta, p.slope]);
            }
            t
        }
        Outputs::Densities { grid, slices } => {
            let mut t = Table::new(&["phi", "external_loss", "x", "p", "density"]);
            let xs = grid.x.values();
            for s in slices {
                for (r, p) in grid.p.values().into_iter().enumerate() {
                    for (c, &x) in xs.iter().enumerate() {
                        t.numbers(&[s.phi, s.external_loss, x, p, s.density[r * xs.len() + c]]);
                    }
                }
            }
            t
        }
        Outputs::AdvantageCurve { qng1_db, points } => {
            let mut t = Table::new(&["qng1_db", "qng2_db", "advantage_db"]);
            for p in points {
                t.numbers(&[*qng1_db, p.qng2_db, p.advantage_db]);
            }
            t
        }
        Outputs::Fit(fit) => {
            let mut t = Table::new(&[
                "rho1",
                "rho2",
                "eps1_sq",
                "eps2_sq",
                "residual_rms",
                "iterations",
                "converged",
            ]);
            t.push(vec![
                fmt_g(fit.rho1),
                fmt_g(fit.rho2),
                fmt_g(fit.eps1_sq),
                fmt_g(fit.eps2_sq),
                fmt_g(fit.residual_rms),
                fit.iterations.to_string(),
                fit.converged.to_string(),
            ]);
            t
        }
    }
}
