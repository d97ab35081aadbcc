//! JSON domain-spec documents.
//!
//! ```json
//! { "type": "polygon", "vertices": [[0,0],[1,0],[1,1],[0,1]], "holes": [] }
//! { "type": "box_union", "boxes": [{"lo": [0,0], "hi": [2,1]}, {"lo": [0,0], "hi": [1,2]}] }
//! { "type": "ball", "center": [0,0,0], "radius": 1 }
//! { "type": "grid", "grid": {"shape": [4,4], "cells": [0,1,...]},
//!   "bounding_box": {"lo": [0,0], "hi": [1,1]} }
//! ```
//!
//! Optional fields on every type: `bounding_box` (required for `grid`),
//! `N` (Heisenberg dimension parameter), and the user-asserted hypotheses
//! `convex` and `mean_convex`. Grid cells are listed with the first axis
//! varying fastest; a nonzero entry marks the cell as part of the domain,
//! which is the interior of the union of marked closed cells.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::domain::{AxisBox, CellClass, Domain, Implicit, Membership};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shape: Vec<usize>,
    pub cells: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    Polygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default)]
        holes: Vec<Vec<[f64; 2]>>,
    },
    BoxUnion {
        boxes: Vec<BoxSpec>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Grid {
        grid: GridSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<BoxSpec>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub heisenberg_n: Option<usize>,
    #[serde(default)]
    pub convex: bool,
    #[serde(default)]
    pub mean_convex: bool,
}

fn spec_err(e: impl std::fmt::Display) -> Error {
    Error::Spec(e.to_string())
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(spec_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain specs always serialize")
    }

    /// Builds the domain. Structural problems are reported as [`Error::Spec`].
    pub fn build(&self) -> Result<Domain> {
        let bbox = self
            .bounding_box
            .as_ref()
            .map(|b| AxisBox::new(b.lo.clone(), b.hi.clone()))
            .transpose()
            .map_err(spec_err)?;
        let domain = match &self.shape {
            ShapeSpec::Polygon { vertices, holes } => Domain::polygon(vertices.clone(), holes.clone()),
            ShapeSpec::BoxUnion { boxes } => boxes
                .iter()
                .map(|b| AxisBox::new(b.lo.clone(), b.hi.clone()))
                .collect::<Result<Vec<_>>>()
                .and_then(Domain::box_union),
            ShapeSpec::Ball { center, radius } => Domain::ball(center.clone(), *radius),
            ShapeSpec::Grid { grid } => {
                let bbox = bbox.clone().ok_or_else(|| spec_err("grid domains require a bounding_box"))?;
                let mask = VoxelMask::new(bbox.clone(), grid.shape.clone(), grid.cells.iter().map(|c| *c != 0).collect())?;
                let step = mask.cell.iter().fold(f64::INFINITY, |a, b| a.min(*b)) / 2.0;
                Implicit::new(Arc::new(mask), bbox, step).map(Domain::Implicit)
            }
        }
        .map_err(|e| match e {
            Error::Spec(_) => e,
            other => spec_err(other),
        })?;
        if let Some(b) = &bbox {
            let own = domain.bounding_box();
            if b.dim() != domain.dim() || (0..b.dim()).any(|i| b.lo[i] > own.lo[i] || b.hi[i] < own.hi[i]) {
                return Err(spec_err("bounding_box does not contain the domain"));
            }
        }
        Ok(domain)
    }
}

/// A domain given by marked cells of a regular grid.
#[derive(Debug, Clone)]
pub struct VoxelMask {
    bbox: AxisBox,
    shape: Vec<usize>,
    cell: Vec<f64>,
    marked: Vec<bool>,
}

impl VoxelMask {
    pub fn new(bbox: AxisBox, shape: Vec<usize>, marked: Vec<bool>) -> Result<Self> {
        if shape.len() != bbox.dim() || shape.iter().any(|n| *n == 0) {
            return Err(spec_err("grid shape must have one positive entry per dimension"));
        }
        if shape.iter().product::<usize>() != marked.len() {
            return Err(spec_err(format!(
                "grid has {} cells but shape {:?} needs {}",
                marked.len(),
                shape,
                shape.iter().product::<usize>()
            )));
        }
        let cell = (0..shape.len()).map(|i| (bbox.hi[i] - bbox.lo[i]) / shape[i] as f64).collect();
        Ok(Self { bbox, shape, cell, marked })
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().zip(self.shape.iter().rev()).fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Whether every cell in the inclusive index ranges satisfies `pred`.
    fn all_in_range(&self, ranges: &[(usize, usize)], pred: impl Fn(bool) -> bool) -> bool {
        let d = ranges.len();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            if !pred(self.marked[self.flat(&idx)]) {
                return false;
            }
            let mut k = 0;
            loop {
                if k == d {
                    return true;
                }
                if idx[k] < ranges[k].1 {
                    idx[k] += 1;
                    break;
                }
                idx[k] = ranges[k].0;
                k += 1;
            }
        }
    }
}

impl Membership for VoxelMask {
    fn contains(&self, x: &[f64]) -> bool {
        let mut ranges = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let f = (x[i] - self.bbox.lo[i]) / self.cell[i];
            if !(f > 0.0 && f < self.shape[i] as f64) {
                return false;
            }
            let k = f.floor();
            let k_us = k as usize;
            if f == k {
                ranges.push((k_us - 1, k_us));
            } else {
                ranges.push((k_us, k_us));
            }
        }
        self.all_in_range(&ranges, |m| m)
    }

    fn classify_box(&self, cell: &AxisBox) -> Option<CellClass> {
        let d = self.shape.len();
        let mut ranges = Vec::with_capacity(d);
        let mut clipped = false;
        for i in 0..d {
            let a = (cell.lo[i] - self.bbox.lo[i]) / self.cell[i];
            let b = (cell.hi[i] - self.bbox.lo[i]) / self.cell[i];
            let n = self.shape[i] as f64;
            if b <= 0.0 || a >= n {
                return Some(CellClass::Outside);
            }
            if a <= 0.0 || b >= n {
                clipped = true;
            }
            let lo = a.floor().clamp(0.0, n - 1.0) as usize;
            let hi = b.floor().clamp(0.0, n - 1.0) as usize;
            ranges.push((lo, hi));
        }
        if !clipped && self.all_in_range(&ranges, |m| m) {
            Some(CellClass::Inside)
        } else if self.all_in_range(&ranges, |m| !m) {
            Some(CellClass::Outside)
        } else {
            Some(CellClass::Uncertain)
        }
    }

    fn volume(&self) -> Option<f64> {
        let cell: f64 = self.cell.iter().product();
        Some(self.marked.iter().filter(|m| **m).count() as f64 * cell)
    }
}
