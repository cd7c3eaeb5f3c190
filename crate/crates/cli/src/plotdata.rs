//! Plot-ready text files. Every value is written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use holstein_core::lindblad::fmt17;

use crate::config::{Output, Solver};
use crate::error::{CliError, CliResult};
use crate::sweep::SweepTable;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    /// appended to the file stem; empty for a single unnamed series
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinesTable {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// `values[i][j]` belongs to `ys[i]` and `xs[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapTable {
    pub x_label: String,
    pub y_label: String,
    pub value_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotData {
    Lines(LinesTable),
    Heatmap(HeatmapTable),
}

/// Writes `stem[_name].dat` per series (lines) or one `stem.dat` grid (heatmap).
pub fn emit_plotdata(dir: &Path, stem: &str, data: &PlotData) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match data {
        PlotData::Lines(t) => {
            let header = format!("# {} {}\n", t.x_label, t.y_label);
            if t.series.is_empty() {
                let path = dir.join(format!("{stem}.dat"));
                fs::write(&path, header)?;
                return Ok(vec![path]);
            }
            let mut paths = Vec::new();
            for s in &t.series {
                if s.x.len() != s.y.len() {
                    return Err(CliError::Numerical(format!(
                        "series {} has mismatched columns",
                        s.name
                    )));
                }
                let mut text = header.clone();
                for (x, y) in s.x.iter().zip(&s.y) {
                    text.push_str(&format!("{} {}\n", fmt17(*x), fmt17(*y)));
                }
                let name = if s.name.is_empty() {
                    format!("{stem}.dat")
                } else {
                    format!("{stem}_{}.dat", s.name)
                };
                let path = dir.join(name);
                fs::write(&path, text)?;
                paths.push(path);
            }
            Ok(paths)
        }
        PlotData::Heatmap(h) => {
            if h.values.len() != h.ys.len() || h.values.iter().any(|r| r.len() != h.xs.len()) {
                return Err(CliError::config(format!("ragged grid for heatmap {stem}")));
            }
            let mut text = format!(
                "# {} (rows: {}, columns: {})\n",
                h.value_label, h.y_label, h.x_label
            );
            text.push_str(&format!("{}\\{}", h.y_label, h.x_label));
            for x in &h.xs {
                text.push(' ');
                text.push_str(&fmt17(*x));
            }
            text.push('\n');
            for (y, row) in h.ys.iter().zip(&h.values) {
                text.push_str(&fmt17(*y));
                for v in row {
                    text.push(' ');
                    text.push_str(&fmt17(*v));
                }
                text.push('\n');
            }
            let path = dir.join(format!("{stem}.dat"));
            fs::write(&path, text)?;
            Ok(vec![path])
        }
    }
}

/// Plot data requested by the sweep outputs. Per-site quantities become one
/// line per site, or one heatmap per site when there is a second axis; scalars
/// become one line per value of the second axis.
pub fn sweep_plotdata(table: &SweepTable) -> Vec<(String, PlotData)> {
    let spec = &table.spec;
    let n = spec.chain.n_sites;
    let xs = spec.axis1.grid.values();
    let ys: Vec<Option<f64>> = match &spec.axis2 {
        Some(a) => a.grid.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let x_label = spec.axis1.axis.name().to_string();
    let nan = f64::NAN;
    // value of `pick` at (row of axis2, column of axis1)
    let grid = |pick: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
        (0..ys.len())
            .map(|r| (0..xs.len()).map(|c| pick(r * xs.len() + c)).collect())
            .collect()
    };
    let site_value = |o: Output, k: usize, site: usize| -> f64 {
        let out = &table.outcomes[k];
        match o {
            Output::Rho => out.rho().map_or(nan, |r| r[site]),
            Output::SitePopulations => out.ness().map_or(nan, |s| s.site_populations[site]),
            _ => nan,
        }
    };
    let scalar = |o: Output, k: usize| -> f64 {
        let out = &table.outcomes[k];
        match o {
            Output::Msd => out.ness().map_or(nan, |s| s.msd),
            Output::PEx => out
                .ness()
                .map(|s| s.p_ex)
                .or(out.kinetic().map(|k| k.p_ex))
                .unwrap_or(nan),
            _ => nan,
        }
    };
    let mut out = Vec::new();
    for &o in &spec.outputs {
        match o {
            Output::Rho | Output::SitePopulations => {
                if spec.solver == Solver::Kinetic && o == Output::SitePopulations {
                    continue;
                }
                let stem = if o == Output::Rho { "rho" } else { "P" };
                if let Some(a2) = &spec.axis2 {
                    for site in 0..n {
                        let values = grid(&|k| site_value(o, k, site));
                        out.push((
                            format!("{stem}_site{}", site + 1),
                            PlotData::Heatmap(HeatmapTable {
                                x_label: x_label.clone(),
                                y_label: a2.axis.name().into(),
                                value_label: format!("{stem}_{}", site + 1),
                                xs: xs.clone(),
                                ys: a2.grid.values(),
                                values,
                            }),
                        ));
                    }
                } else {
                    let series = (0..n)
                        .map(|site| Series {
                            name: format!("site{}", site + 1),
                            x: xs.clone(),
                            y: (0..xs.len()).map(|k| site_value(o, k, site)).collect(),
                        })
                        .collect();
                    out.push((
                        stem.into(),
                        PlotData::Lines(LinesTable {
                            x_label: x_label.clone(),
                            y_label: stem.into(),
                            series,
                        }),
                    ));
                }
            }
            Output::Msd | Output::PEx => {
                if spec.solver == Solver::Kinetic && o == Output::Msd {
                    continue;
                }
                let values = grid(&|k| scalar(o, k));
                let series = ys
                    .iter()
                    .zip(values)
                    .map(|(y, row)| Series {
                        name: match (y, &spec.axis2) {
                            (Some(y), Some(a)) => format!("{}={y}", a.axis.name()),
                            _ => String::new(),
                        },
                        x: xs.clone(),
                        y: row,
                    })
                    .collect();
                out.push((
                    o.name().into(),
                    PlotData::Lines(LinesTable {
                        x_label: x_label.clone(),
                        y_label: o.name().into(),
                        series,
                    }),
                ));
            }
            Output::Spectrum | Output::Crossings | Output::Eigenstates => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lines_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let t = PlotData::Lines(LinesTable {
            x_label: "delta".into(),
            y_label: "msd".into(),
            series: vec![],
        });
        let paths = emit_plotdata(dir.path(), "msd", &t).unwrap();
        assert_eq!(fs::read_to_string(&paths[0]).unwrap(), "# delta msd\n");
    }

    #[test]
    fn single_series() {
        let dir = tempfile::tempdir().unwrap();
        let s = Series {
            name: String::new(),
            x: vec![0.5, 1.0, 1.5],
            y: vec![1.0, 2.0, 3.0],
        };
        let t = PlotData::Lines(LinesTable {
            x_label: "delta".into(),
            y_label: "msd".into(),
            series: vec![s],
        });
        let paths = emit_plotdata(dir.path(), "msd", &t).unwrap();
        assert_eq!(paths.len(), 1);
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("5.0000000000000000e-1 1.0000000000000000e0"));
    }

    #[test]
    fn ragged_heatmap_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let h = HeatmapTable {
            x_label: "delta".into(),
            y_label: "lambda".into(),
            value_label: "rho_1".into(),
            xs: vec![0.1, 0.2],
            ys: vec![0.4, 0.5],
            values: vec![vec![1.0, 2.0], vec![3.0]],
        };
        assert!(emit_plotdata(dir.path(), "rho_site1", &PlotData::Heatmap(h.clone())).is_err());
        let ok = HeatmapTable {
            values: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            ..h
        };
        let p = emit_plotdata(dir.path(), "rho_site1", &PlotData::Heatmap(ok)).unwrap();
        assert_eq!(fs::read_to_string(&p[0]).unwrap().lines().count(), 4);
    }
}
