//! Newton fractals: every pixel of a window is a starting point, coloured
//! by the limit its optimizer run converges to.
//!
//! Labels index a catalogue of limit points. The catalogue is seeded with
//! the objective's catalogued minima, designated global minimum first, so
//! label `0` always means the global minimum when the objective names one.
//! Runs that do not converge get label `-1`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objectives::{by_name, designated_minimum, CriticalKind, Objective, Window};
use crate::optimizers::{second_order_newton, third_order_newton, OptimizerConfig, Termination};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    SecondOrder,
    /// Third-order Newton without identity shifts.
    ThirdOrder,
    /// Third-order Newton retrying infeasible subproblems with `σI` added.
    ThirdOrderWithShift(f64),
}

impl OptimizerKind {
    /// File-name fragment: `newton2`, `ton` or `ton_shift<σ>`.
    pub fn stem(&self) -> String {
        match self {
            OptimizerKind::SecondOrder => "newton2".into(),
            OptimizerKind::ThirdOrder => "ton".into(),
            OptimizerKind::ThirdOrderWithShift(s) => format!("ton_shift{s}"),
        }
    }

    fn shifts(&self) -> Vec<f64> {
        match self {
            OptimizerKind::ThirdOrderWithShift(s) if *s > 0.0 => vec![0.0, *s],
            _ => vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractalSpec {
    pub objective: String,
    pub optimizer: OptimizerKind,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub config: OptimizerConfig<f64>,
    /// Converged points within this distance share a label.
    pub match_radius: f64,
}

impl FractalSpec {
    /// Defaults: the objective's window, 400×400 pixels, 50 iterations per
    /// pixel and a match radius of `1e-2`. Fails for unknown objectives.
    pub fn new(objective: &str, optimizer: OptimizerKind) -> Result<Self> {
        let f = lookup(objective)?;
        Ok(Self {
            objective: objective.to_string(),
            optimizer,
            window: f.window(),
            width: 400,
            height: 400,
            config: OptimizerConfig { max_iters: 50, ..OptimizerConfig::default() },
            match_radius: 1e-2,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidProblem(format!(
                "resolution {}x{} is below 2x2",
                self.width, self.height
            )));
        }
        if self.window.is_degenerate() {
            return Err(Error::InvalidProblem("degenerate window".into()));
        }
        if !(self.match_radius > 0.0) {
            return Err(Error::InvalidProblem("match radius must be positive".into()));
        }
        Ok(())
    }

    /// Centre of the pixel in `row` (top row = largest `y`) and `col`.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let w = &self.window;
        let dx = (w.x_max - w.x_min) / self.width as f64;
        let dy = (w.y_max - w.y_min) / self.height as f64;
        (w.x_min + (col as f64 + 0.5) * dx, w.y_max - (row as f64 + 0.5) * dy)
    }

    /// Pixel whose centre is nearest to `(x, y)`, if inside the window.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let w = &self.window;
        if !w.contains(x, y) {
            return None;
        }
        let fx = (x - w.x_min) / (w.x_max - w.x_min) * self.width as f64;
        let fy = (w.y_max - y) / (w.y_max - w.y_min) * self.height as f64;
        let col = (fx.floor() as usize).min(self.width - 1);
        let row = (fy.floor() as usize).min(self.height - 1);
        Some((row, col))
    }

    /// `<objective>_<optimizer>[_shiftN]`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.objective, self.optimizer.stem())
    }

    fn run_config(&self) -> OptimizerConfig<f64> {
        OptimizerConfig { shifts: self.optimizer.shifts(), ..self.config.clone() }
    }
}

fn lookup(name: &str) -> Result<Box<dyn Objective<f64>>> {
    by_name(name).ok_or_else(|| Error::InvalidProblem(format!("unknown objective `{name}`")))
}

/// Limit of one run from `x0`, or `None` if it did not converge.
pub fn run_from(spec: &FractalSpec, f: &dyn Objective<f64>, x0: &DVector<f64>) -> Option<DVector<f64>> {
    let cfg = spec.run_config();
    let trace = match spec.optimizer {
        OptimizerKind::SecondOrder => second_order_newton(f, x0, &cfg),
        OptimizerKind::ThirdOrder | OptimizerKind::ThirdOrderWithShift(_) => third_order_newton(f, x0, &cfg),
    };
    match trace {
        Ok(t) if t.termination == Termination::Converged => Some(t.final_point().clone()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueEntry {
    pub point: DVector<f64>,
    /// Kind of the catalogued critical point this entry was seeded from.
    pub named: Option<CriticalKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractalImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first; `-1` for runs that did not converge.
    pub labels: Vec<i32>,
    pub catalogue: Vec<CatalogueEntry>,
    /// Colour only label 0 distinctively (black).
    pub highlight_global_only: bool,
}

/// Nearest catalogue entry within `radius`.
fn nearest(catalogue: &[CatalogueEntry], x: &DVector<f64>, radius: f64) -> Option<usize> {
    catalogue
        .iter()
        .enumerate()
        .map(|(i, e)| (i, (&e.point - x).norm()))
        .filter(|(_, d)| *d <= radius)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Classifies every pixel of `spec`. Pixels run in parallel; the result
/// does not depend on scheduling.
pub fn render(spec: &FractalSpec) -> Result<FractalImage> {
    spec.validate()?;
    let f = lookup(&spec.objective)?;
    if f.dim() != 2 {
        return Err(Error::InvalidProblem(format!("`{}` is not two-dimensional", spec.objective)));
    }
    let mut catalogue: Vec<CatalogueEntry> = Vec::new();
    let designated = designated_minimum(f.as_ref());
    let minima = designated
        .into_iter()
        .chain(f.critical_points().iter().filter(|p| p.kind.is_minimum() && Some(*p) != designated));
    for p in minima {
        if nearest(&catalogue, &p.point, spec.match_radius).is_none() {
            catalogue.push(CatalogueEntry { point: p.point.clone(), named: Some(p.kind) });
        }
    }

    let limits: Vec<Option<DVector<f64>>> = (0..spec.width * spec.height)
        .into_par_iter()
        .map(|k| {
            let (x, y) = spec.pixel_center(k / spec.width, k % spec.width);
            run_from(spec, f.as_ref(), &DVector::from_vec(vec![x, y]))
        })
        .collect();

    // Limits far from every seeded entry become new entries, in row-major order.
    let labels = limits
        .iter()
        .map(|limit| match limit {
            None => -1,
            Some(x) => match nearest(&catalogue, x, spec.match_radius) {
                Some(i) => i as i32,
                None => {
                    catalogue.push(CatalogueEntry { point: x.clone(), named: None });
                    (catalogue.len() - 1) as i32
                }
            },
        })
        .collect();

    Ok(FractalImage {
        width: spec.width,
        height: spec.height,
        labels,
        catalogue,
        highlight_global_only: f.highlight_global_only(),
    })
}

/// Colours for labels; label `-1` is white.
pub const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 200, 200],
    [240, 50, 230],
    [128, 128, 0],
];
pub const NON_CONVERGED: [u8; 3] = [255, 255, 255];
pub const GLOBAL_HIGHLIGHT: [u8; 3] = [0, 0, 0];

impl FractalImage {
    pub fn label(&self, row: usize, col: usize) -> i32 {
        self.labels[row * self.width + col]
    }

    /// Pixels with a non-negative label.
    pub fn converged_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l >= 0).count()
    }

    /// Colour of `label`. With `highlight_global_only`, label 0 is black and
    /// the others cycle through the palette after its first colour;
    /// otherwise every label cycles through the palette.
    pub fn color(&self, label: i32) -> [u8; 3] {
        match label {
            l if l < 0 => NON_CONVERGED,
            0 if self.highlight_global_only => GLOBAL_HIGHLIGHT,
            l if self.highlight_global_only => PALETTE[1 + (l as usize - 1) % (PALETTE.len() - 1)],
            l => PALETTE[l as usize % PALETTE.len()],
        }
    }

    /// Binary PPM (`P6`).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.labels.iter().flat_map(|&l| self.color(l)).collect();
        w.write_all(&bytes)
    }

    /// One line per pixel row, comma-separated labels.
    pub fn write_label_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|l| l.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// `label,x,y,kind`; `kind` is `discovered` for unseeded limits.
    pub fn write_catalogue_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "label,x,y,kind")?;
        for (i, e) in self.catalogue.iter().enumerate() {
            let kind = e.named.map_or("discovered", |k| k.as_str());
            writeln!(w, "{i},{:e},{:e},{kind}", e.point[0], e.point[1])?;
        }
        Ok(())
    }
}

/// Paths written by [`write_image`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePaths {
    pub ppm: PathBuf,
    pub labels: PathBuf,
    pub catalogue: PathBuf,
}

impl ImagePaths {
    /// `<path>.ppm`, `<path>.csv` and `<path>_catalogue.csv`, with any
    /// extension on `path` replaced.
    pub fn for_base(path: &Path) -> Self {
        let stem = path.with_extension("");
        let mut catalogue = stem.clone().into_os_string();
        catalogue.push("_catalogue.csv");
        Self { ppm: stem.with_extension("ppm"), labels: stem.with_extension("csv"), catalogue: catalogue.into() }
    }
}

/// Writes the PPM image and its label and catalogue CSVs next to `path`.
pub fn write_image(img: &FractalImage, path: &Path) -> Result<ImagePaths> {
    let paths = ImagePaths::for_base(path);
    write_file(&paths.ppm, |w| img.write_ppm(w))?;
    write_file(&paths.labels, |w| img.write_label_csv(w))?;
    write_file(&paths.catalogue, |w| img.write_catalogue_csv(w))?;
    Ok(paths)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let io_err = |e: io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(objective: &str, optimizer: OptimizerKind, res: usize) -> FractalSpec {
        let mut s = FractalSpec::new(objective, optimizer).unwrap();
        s.width = res;
        s.height = res;
        s
    }

    #[test]
    fn quadratic_window_is_one_basin() {
        for kind in [OptimizerKind::SecondOrder, OptimizerKind::ThirdOrder] {
            let img = render(&small("quadratic", kind, 5)).unwrap();
            assert!(img.labels.iter().all(|&l| l == 0));
            assert_eq!(img.catalogue.len(), 1);
        }
    }

    #[test]
    fn all_zero_image_is_black() {
        let img = FractalImage {
            width: 2,
            height: 2,
            labels: vec![0; 4],
            catalogue: vec![CatalogueEntry { point: DVector::zeros(2), named: Some(CriticalKind::GlobalMin) }],
            highlight_global_only: true,
        };
        let mut out = Vec::new();
        img.write_ppm(&mut out).unwrap();
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..], &[0u8; 12]);
        assert_eq!(img.color(-1), [255, 255, 255]);
    }

    #[test]
    fn label_csv_shape() {
        let img = FractalImage {
            width: 3,
            height: 2,
            labels: vec![0, -1, 1, 2, 2, 0],
            catalogue: Vec::new(),
            highlight_global_only: false,
        };
        let mut out = Vec::new();
        img.write_label_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0,-1,1\n2,2,0\n");
    }

    #[test]
    fn palette_modes() {
        let mut img = FractalImage { width: 1, height: 1, labels: vec![0], catalogue: vec![], highlight_global_only: false };
        assert_eq!(img.color(0), PALETTE[0]);
        assert_eq!(img.color(9), PALETTE[1]);
        img.highlight_global_only = true;
        assert_eq!(img.color(0), [0, 0, 0]);
        assert_eq!(img.color(1), PALETTE[1]);
        assert_eq!(img.color(8), PALETTE[1]);
    }

    #[test]
    fn himmelblau_minima_label_themselves() {
        let spec = small("himmelblau", OptimizerKind::ThirdOrder, 2);
        let f = lookup("himmelblau").unwrap();
        let minima: Vec<_> = f.critical_points().iter().filter(|p| p.kind.is_minimum()).collect();
        let img = render(&spec).unwrap();
        assert!(img.catalogue.len() >= 4);
        for (i, p) in minima.iter().enumerate() {
            let limit = run_from(&spec, f.as_ref(), &p.point).unwrap();
            assert_eq!(nearest(&img.catalogue, &limit, spec.match_radius), Some(i));
            assert_eq!(limit, p.point, "no steps from a stationary start");
        }
    }

    #[test]
    fn pixel_geometry() {
        let mut s = FractalSpec::new("quadratic", OptimizerKind::SecondOrder).unwrap();
        s.window = Window::new(0.0, 4.0, 0.0, 2.0);
        s.width = 4;
        s.height = 2;
        assert_eq!(s.pixel_center(0, 0), (0.5, 1.5));
        assert_eq!(s.pixel_center(1, 3), (3.5, 0.5));
        assert_eq!(s.pixel_of(0.5, 1.5), Some((0, 0)));
        assert_eq!(s.pixel_of(4.0, 0.0), Some((1, 3)));
        assert_eq!(s.pixel_of(5.0, 0.0), None);
    }

    #[test]
    fn catalogue_entries_are_separated() {
        let img = render(&small("himmelblau", OptimizerKind::SecondOrder, 24)).unwrap();
        for (i, a) in img.catalogue.iter().enumerate() {
            for b in &img.catalogue[i + 1..] {
                assert!((&a.point - &b.point).norm() > 1e-2);
            }
        }
        assert!(img.labels.iter().all(|&l| l < img.catalogue.len() as i32));
    }

    #[test]
    fn renders_are_deterministic() {
        let spec = small("himmelblau", OptimizerKind::ThirdOrder, 12);
        let a = render(&spec).unwrap();
        let b = render(&spec).unwrap();
        let bytes = |img: &FractalImage| {
            let mut v = Vec::new();
            img.write_ppm(&mut v).unwrap();
            img.write_label_csv(&mut v).unwrap();
            v
        };
        assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn invalid_specs() {
        assert!(FractalSpec::new("nope", OptimizerKind::ThirdOrder).is_err());
        let mut s = small("quadratic", OptimizerKind::ThirdOrder, 1);
        assert!(render(&s).is_err());
        s.width = 2;
        s.height = 2;
        s.window = Window::new(1.0, 1.0, 0.0, 1.0);
        assert!(render(&s).is_err());
    }

    #[test]
    fn files_are_written_with_context_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let img = render(&small("quadratic", OptimizerKind::SecondOrder, 2)).unwrap();
        let paths = write_image(&img, &dir.path().join("quadratic_newton2.ppm")).unwrap();
        assert!(paths.ppm.ends_with("quadratic_newton2.ppm"));
        assert!(paths.labels.ends_with("quadratic_newton2.csv"));
        assert!(paths.catalogue.ends_with("quadratic_newton2_catalogue.csv"));
        assert_eq!(std::fs::read_to_string(&paths.labels).unwrap(), "0,0\n0,0\n");
        let missing = dir.path().join("no/such/dir/x");
        match write_image(&img, &missing) {
            Err(Error::Io { path, .. }) => assert!(path.contains("no/such/dir")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_stems() {
        let s = FractalSpec::new("himmelblau", OptimizerKind::ThirdOrderWithShift(5.0)).unwrap();
        assert_eq!(s.file_stem(), "himmelblau_ton_shift5");
        let s = FractalSpec::new("beale", OptimizerKind::SecondOrder).unwrap();
        assert_eq!(s.file_stem(), "beale_newton2");
    }
}
