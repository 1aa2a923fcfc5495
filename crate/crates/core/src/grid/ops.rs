use super::fields::{ScalarField, SymTensorField, VectorField};
use super::{idx3, StaggeredGrid, PAIRS};

impl StaggeredGrid {
    /// MAC divergence: flux differences over each cell. Exact for affine
    /// fields.
    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self);
        let n = self.n;
        for a in 0..self.dim {
            let d = self.face_dims(a);
            let inv_h = 1.0 / self.h[a];
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        let c = [i, j, k];
                        let mut up = c;
                        up[a] = self.upper_face(a, c[a]);
                        let lo = c;
                        let flux = v.comp[a][idx3(&d, up[0], up[1], up[2])]
                            - v.comp[a][idx3(&d, lo[0], lo[1], lo[2])];
                        out.data[self.cell_index(i, j, k)] += flux * inv_h;
                    }
                }
            }
        }
        out
    }

    /// Cell-to-face gradient with zero normal derivative at walls.
    pub fn gradient(&self, p: &ScalarField) -> VectorField {
        let mut out = VectorField::zeros(self);
        for a in 0..self.dim {
            let d = self.face_dims(a);
            let inv_h = 1.0 / self.h[a];
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let f = [i, j, k][a];
                        if self.is_wall_face(a, f) {
                            continue;
                        }
                        let mut hi = [i, j, k];
                        let mut lo = [i, j, k];
                        // Cell on each side of face f along axis a.
                        hi[a] = f % self.n[a];
                        lo[a] = (f + self.n[a] - 1) % self.n[a];
                        let g = (p.data[self.cell_index(hi[0], hi[1], hi[2])]
                            - p.data[self.cell_index(lo[0], lo[1], lo[2])])
                            * inv_h;
                        out.comp[a][idx3(&d, i, j, k)] = g;
                    }
                }
            }
        }
        out
    }

    /// Symmetric velocity gradient on the native staggering: diagonal
    /// entries at cell centers, off-diagonal entries at edges/nodes with
    /// linear ghost extrapolation at walls. Exact for affine fields
    /// everywhere, including boundary sites.
    pub fn sym_gradient(&self, v: &VectorField) -> SymTensorField {
        let mut out = SymTensorField::zeros(self);
        let n = self.n;
        // Diagonal entries.
        for a in 0..self.dim {
            let d = self.face_dims(a);
            let inv_h = 1.0 / self.h[a];
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        let c = [i, j, k];
                        let mut up = c;
                        up[a] = self.upper_face(a, c[a]);
                        out.diag[a][self.cell_index(i, j, k)] = (v.comp[a]
                            [idx3(&d, up[0], up[1], up[2])]
                            - v.comp[a][idx3(&d, c[0], c[1], c[2])])
                            * inv_h;
                    }
                }
            }
        }
        // Off-diagonal entries.
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            if b >= self.dim {
                continue;
            }
            let od = self.off_dims(a, b);
            for k in 0..od[2] {
                for j in 0..od[1] {
                    for i in 0..od[0] {
                        let s = [i, j, k];
                        let da = self.tangential_derivative(v, a, b, &s);
                        let db = self.tangential_derivative(v, b, a, &s);
                        out.off[p][idx3(&od, i, j, k)] = 0.5 * (da + db);
                    }
                }
            }
        }
        out
    }

    /// d v_comp / d x_along at an off-diagonal site. The site carries a face
    /// index along `comp` and a node index along `along`; walls use linear
    /// ghost extrapolation (one-sided difference).
    fn tangential_derivative(&self, v: &VectorField, comp: usize, along: usize, site: &[usize; 3]) -> f64 {
        let d = self.face_dims(comp);
        let nb = self.n[along];
        let jb = site[along];
        let inv_h = 1.0 / self.h[along];
        let value = |cell_b: usize| {
            let mut q = *site;
            q[along] = cell_b;
            v.comp[comp][idx3(&d, q[0], q[1], q[2])]
        };
        if self.periodic[along] {
            let hi = jb % nb;
            let lo = (jb + nb - 1) % nb;
            (value(hi) - value(lo)) * inv_h
        } else if jb == 0 {
            (value(1) - value(0)) * inv_h
        } else if jb == nb {
            (value(nb - 1) - value(nb - 2)) * inv_h
        } else {
            (value(jb) - value(jb - 1)) * inv_h
        }
    }

    /// Fused `-div grad` with the homogeneous Neumann (or periodic) closure,
    /// writing into `out`. This is the positive-semidefinite operator used
    /// by the pressure and diffusion solves.
    ///
    /// Each output cell is a pure function of `p`, so the loop splits over
    /// SIM_THREADS workers with bit-identical results.
    pub fn neg_laplacian_apply(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv_h2 = [
            1.0 / (self.h[0] * self.h[0]),
            1.0 / (self.h[1] * self.h[1]),
            1.0 / (self.h[2] * self.h[2]),
        ];
        let strides = [1usize, n[0], n[0] * n[1]];
        let this = *self;
        crate::util::par_chunks(out, crate::util::sim_threads(), |start, chunk| {
            for (off, slot) in chunk.iter_mut().enumerate() {
                let c = start + off;
                let i = c % n[0];
                let j = (c / n[0]) % n[1];
                let k = c / (n[0] * n[1]);
                let pos = [i, j, k];
                let mut total = 0.0;
                for a in 0..this.dim {
                    let stride = strides[a];
                    let mut acc = 0.0;
                    if pos[a] + 1 < n[a] {
                        acc += p[c + stride] - p[c];
                    } else if this.periodic[a] {
                        acc += p[c + stride - n[a] * stride] - p[c];
                    }
                    if pos[a] > 0 {
                        acc += p[c - stride] - p[c];
                    } else if this.periodic[a] {
                        acc += p[c + (n[a] - 1) * stride] - p[c];
                    }
                    total -= acc * inv_h2[a];
                }
                *slot = total;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::Rng;

    fn fill_faces(g: &StaggeredGrid, v: &mut VectorField, f: impl Fn(usize, f64, f64, f64) -> f64) {
        for a in 0..g.dim {
            let d = g.face_dims(a);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        // Face-center coordinates.
                        let mut x = [
                            g.origin[0] + (i as f64 + 0.5) * g.h[0],
                            g.origin[1] + (j as f64 + 0.5) * g.h[1],
                            g.origin[2] + (k as f64 + 0.5) * g.h[2],
                        ];
                        x[a] -= 0.5 * g.h[a];
                        v.comp[a][idx3(&d, i, j, k)] = f(a, x[0], x[1], x[2]);
                    }
                }
            }
        }
    }

    fn random_vector(g: &StaggeredGrid, rng: &mut Rng, wall_constrained: bool) -> VectorField {
        let mut v = VectorField::zeros(g);
        for a in 0..g.dim {
            for x in v.comp[a].iter_mut() {
                *x = rng.range(-1.0, 1.0);
            }
        }
        if wall_constrained {
            v.constrain_wall_normals();
        }
        v
    }

    #[test]
    fn divergence_exact_on_affine() {
        let g = StaggeredGrid::boxed(3, &[4, 5, 3], &[1.0, 1.3, 0.7]).unwrap();

        let mut v = VectorField::zeros(&g);
        fill_faces(&g, &mut v, |_, _, _, _| 2.5);
        assert_eq!(g.divergence(&v).norm_inf(), 0.0);

        // v = (x, -y, 0): divergence-free.
        fill_faces(&g, &mut v, |a, x, y, _| match a {
            0 => x,
            1 => -y,
            _ => 0.0,
        });
        assert!(g.divergence(&v).norm_inf() < 1e-13);

        // v = (x, y, z): divergence 3.
        fill_faces(&g, &mut v, |a, x, y, z| [x, y, z][a]);
        let div = g.divergence(&v);
        for &d in div.data.iter() {
            assert!((d - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_gradient_examples() {
        let g = StaggeredGrid::boxed(3, &[6, 4, 3], &[1.0, 1.0, 1.0]).unwrap();

        let v = VectorField::zeros(&g);
        let d = g.sym_gradient(&v);
        assert_eq!(d.dot_sites(&d), 0.0);

        // Linear shear v = (y, 0, 0): D_xy = 1/2 everywhere, others 0.
        let mut v = VectorField::zeros(&g);
        fill_faces(&g, &mut v, |a, _, y, _| if a == 0 { y } else { 0.0 });
        let d = g.sym_gradient(&v);
        for a in 0..3 {
            for &x in d.diag[a].iter() {
                assert!(x.abs() < 1e-13);
            }
        }
        for &x in d.off[0].iter() {
            assert!((x - 0.5).abs() < 1e-13, "D_xy = {x}");
        }
        for &x in d.off[1].iter().chain(d.off[2].iter()) {
            assert!(x.abs() < 1e-13);
        }
    }

    #[test]
    fn sym_gradient_second_order_convergence() {
        // Smooth manufactured field; max-norm error should drop ~4x per
        // refinement. u = cos(pi x) sin(pi y) / pi, v = 0, so
        // D_xy = cos(pi x) cos(pi y) / 2.
        let exact_d01 = |x: f64, y: f64| {
            0.5 * (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos()
        };
        let mut errors = Vec::new();
        for nc in [16usize, 32, 64] {
            let g = StaggeredGrid::boxed(2, &[nc, nc], &[1.0, 1.0]).unwrap();
            let mut v = VectorField::zeros(&g);
            fill_faces(&g, &mut v, |a, x, y, _| match a {
                0 => (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).sin()
                    / std::f64::consts::PI,
                _ => 0.0,
            });
            let d = g.sym_gradient(&v);
            let od = g.off_dims(0, 1);
            let mut err = 0.0f64;
            // Interior sites only: boundary sites are one-sided (first order).
            for j in 1..od[1] - 1 {
                for i in 1..od[0] - 1 {
                    let x = i as f64 * g.h[0];
                    let y = j as f64 * g.h[1];
                    let got = d.off[0][idx3(&od, i, j, 0)];
                    err = err.max((got - exact_d01(x, y)).abs());
                }
            }
            errors.push(err);
        }
        assert!(errors[0] / errors[1] > 3.3, "errors {errors:?}");
        assert!(errors[1] / errors[2] > 3.3, "errors {errors:?}");
    }

    #[test]
    fn divergence_gradient_adjointness() {
        let mut rng = Rng::new(808);
        for (dim, periodic) in [
            (2usize, [false, false, false]),
            (2, [true, false, false]),
            (3, [false, false, false]),
            (3, [false, true, false]),
        ] {
            let g = StaggeredGrid::new(
                dim,
                &[5, 4, 3][..dim],
                &[1.0, 0.8, 1.2][..dim],
                &[0.0; 3][..dim],
                &periodic[..dim],
            )
            .unwrap();
            for _ in 0..20 {
                let v = random_vector(&g, &mut rng, true);
                let mut p = ScalarField::zeros(&g);
                for x in p.data.iter_mut() {
                    *x = rng.range(-1.0, 1.0);
                }
                let div = g.divergence(&v);
                let grad = g.gradient(&p);
                let lhs: f64 = div
                    .data
                    .iter()
                    .zip(p.data.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * g.cell_volume();
                let rhs = -v.dot_vol(&grad);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0),
                    "dim {dim} periodic {periodic:?}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn operators_are_linear() {
        let mut rng = Rng::new(4242);
        let g = StaggeredGrid::boxed(2, &[6, 5], &[1.0, 1.0]).unwrap();
        let u = random_vector(&g, &mut rng, false);
        let v = random_vector(&g, &mut rng, false);
        let (a, b) = (1.7, -0.3);
        let mut w = VectorField::zeros(&g);
        for c in 0..g.dim {
            for i in 0..w.comp[c].len() {
                w.comp[c][i] = a * u.comp[c][i] + b * v.comp[c][i];
            }
        }
        let div_w = g.divergence(&w);
        let div_u = g.divergence(&u);
        let div_v = g.divergence(&v);
        for i in 0..div_w.data.len() {
            let expect = a * div_u.data[i] + b * div_v.data[i];
            assert!((div_w.data[i] - expect).abs() < 1e-12);
        }
        let d_w = g.sym_gradient(&w);
        let d_u = g.sym_gradient(&u);
        let d_v = g.sym_gradient(&v);
        for p in 0..3 {
            for i in 0..d_w.off[p].len() {
                let expect = a * d_u.off[p][i] + b * d_v.off[p][i];
                assert!((d_w.off[p][i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_matches_div_grad() {
        let mut rng = Rng::new(99);
        for periodic in [[false; 3], [true, false, false]] {
            let g =
                StaggeredGrid::new(2, &[6, 5], &[1.0, 0.9], &[0.0; 2], &periodic[..2]).unwrap();
            let mut p = ScalarField::zeros(&g);
            for x in p.data.iter_mut() {
                *x = rng.range(-1.0, 1.0);
            }
            let composed = g.divergence(&g.gradient(&p));
            let mut fused = vec![0.0; g.cells()];
            g.neg_laplacian_apply(&p.data, &mut fused);
            for i in 0..fused.len() {
                assert!((fused[i] + composed.data[i]).abs() < 1e-11);
            }
        }
    }
}
