use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::mask_flow;
use crate::error::{dim_mismatch, Result};
use crate::hodge::{hodge_project, Component, HodgeBasis};
use crate::linalg::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Uniform,
    Spectral,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Spectral => "spectral",
        }
    }
}

/// Embedding distances `||x̃_S - x̃'_S||` between flows and their augmentations.
#[derive(Clone, Debug, PartialEq)]
pub struct GapStudy {
    pub draws: usize,
    /// `[scheme][component][draw]`, schemes and components in declaration order.
    distances: [[Vec<f64>; 3]; 2],
}

fn comp_index(c: Component) -> usize {
    match c {
        Component::Gradient => 0,
        Component::Curl => 1,
        Component::Harmonic => 2,
    }
}

fn scheme_index(s: Scheme) -> usize {
    match s {
        Scheme::Uniform => 0,
        Scheme::Spectral => 1,
    }
}

impl GapStudy {
    pub fn distances(&self, scheme: Scheme, c: Component) -> &[f64] {
        &self.distances[scheme_index(scheme)][comp_index(c)]
    }

    pub fn mean(&self, scheme: Scheme, c: Component) -> f64 {
        let d = self.distances(scheme, c);
        d.iter().sum::<f64>() / d.len().max(1) as f64
    }

    /// `scheme,component,draw,distance` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,component,draw,distance\n");
        for scheme in [Scheme::Uniform, Scheme::Spectral] {
            for c in Component::ALL {
                for (k, d) in self.distances(scheme, c).iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{}",
                        scheme.name(),
                        c.name(),
                        k,
                        crate::datasets::format_f64(*d)
                    );
                }
            }
        }
        s
    }

    /// Overlaid histograms of both schemes for one component.
    pub fn histogram_svg(&self, c: Component, bins: usize) -> String {
        let bins = bins.max(1);
        let u = self.distances(Scheme::Uniform, c);
        let s = self.distances(Scheme::Spectral, c);
        let hi = u.iter().chain(s).fold(0.0f64, |m, &v| m.max(v)).max(1e-12);
        let count = |d: &[f64]| {
            let mut h = vec![0usize; bins];
            for &v in d {
                h[((v / hi * bins as f64) as usize).min(bins - 1)] += 1;
            }
            h
        };
        let (hu, hs) = (count(u), count(s));
        let top = hu.iter().chain(&hs).copied().max().unwrap_or(1).max(1) as f64;
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let bw = (w - 2.0 * pad) / bins as f64;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        for (hist, color) in [(&hu, "#1f77b4"), (&hs, "#d62728")] {
            for (k, &n) in hist.iter().enumerate() {
                let bh = (h - 2.0 * pad) * n as f64 / top;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.5"/>"#,
                    pad + k as f64 * bw,
                    h - pad - bh,
                    bw,
                    bh
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<line x1="{pad}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
            y = h - pad,
            x2 = w - pad
        );
        let _ = writeln!(
            svg,
            r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{} embedding distance (blue: uniform, red: spectral)</text>"#,
            c.name()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{pad}" y="{y}" font-family="sans-serif" font-size="12">0</text><text x="{x}" y="{y}" font-family="sans-serif" font-size="12" text-anchor="end">{hi:.3}</text>"#,
            y = h - pad + 16.0,
            x = w - pad
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// Uniform drop probabilities with the same total mass as `p`.
pub fn matched_uniform(p: &[f64]) -> Vec<f64> {
    let mean = p.iter().sum::<f64>() / p.len().max(1) as f64;
    vec![mean; p.len()]
}

/// Samples `draws` augmentations under each scheme, cycling through `flows`,
/// and records the per-component embedding distance to the original flow.
pub fn emit_embedding_gap_study<R: Rng + ?Sized>(
    flows: &[&[f64]],
    basis: &HodgeBasis,
    p_uniform: &[Vec<f64>],
    p_spectral: &[Vec<f64>],
    draws: usize,
    rng: &mut R,
) -> Result<GapStudy> {
    if flows.is_empty() || p_uniform.len() != flows.len() || p_spectral.len() != flows.len() {
        return Err(dim_mismatch("one probability vector per flow under each scheme"));
    }
    let originals = flows
        .iter()
        .map(|x| hodge_project(x, basis))
        .collect::<Result<Vec<_>>>()?;
    let mut distances: [[Vec<f64>; 3]; 2] = Default::default();
    for (si, probs) in [p_uniform, p_spectral].into_iter().enumerate() {
        for d in 0..draws {
            let i = d % flows.len();
            let view = mask_flow(flows[i], &probs[i], rng)?;
            let e = hodge_project(&view, basis)?;
            for c in Component::ALL {
                let diff: Vec<f64> = originals[i]
                    .component(c)
                    .iter()
                    .zip(e.component(c))
                    .map(|(a, b)| a - b)
                    .collect();
                distances[si][comp_index(c)].push(norm(&diff));
            }
        }
    }
    Ok(GapStudy { draws, distances })
}
