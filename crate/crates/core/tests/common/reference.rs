//! Scalar-loop reference implementation of the analyser forward pass.
//!
//! Reads weights straight from the flat parameter vector following the
//! documented layout and materializes every intermediate tensor as nested
//! `Vec`s. Shares no code with the library's forward path.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub struct Block {
    pub wq: Mat,
    pub wk: Mat,
    pub wv: Mat,
    pub wo: Mat,
    pub g1: Vec<f64>,
    pub b1: Vec<f64>,
    pub f1w: Mat,
    pub f1b: Vec<f64>,
    pub f2w: Mat,
    pub f2b: Vec<f64>,
    pub g2: Vec<f64>,
    pub b2: Vec<f64>,
}

pub struct RefNet {
    pub h: usize,
    pub heads: usize,
    pub w_emb: Mat,
    pub layers: Vec<(Block, Block)>,
}

struct Cursor<'a> {
    v: &'a [f64],
    p: usize,
}

impl Cursor<'_> {
    fn vec(&mut self, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for _ in 0..n {
            out.push(self.v[self.p]);
            self.p += 1;
        }
        out
    }
    fn mat(&mut self, r: usize, c: usize) -> Mat {
        (0..r).map(|_| self.vec(c)).collect()
    }
    fn block(&mut self, h: usize, f: usize) -> Block {
        Block {
            wq: self.mat(h, h),
            wk: self.mat(h, h),
            wv: self.mat(h, h),
            wo: self.mat(h, h),
            g1: self.vec(h),
            b1: self.vec(h),
            f1w: self.mat(h, f),
            f1b: self.vec(f),
            f2w: self.mat(f, h),
            f2b: self.vec(h),
            g2: self.vec(h),
            b2: self.vec(h),
        }
    }
}

impl RefNet {
    pub fn from_flat(v: &[f64], h: usize, f: usize, heads: usize, layers: usize) -> Self {
        let mut c = Cursor { v, p: 0 };
        let w_emb = c.mat(2, h);
        let layers = (0..layers).map(|_| (c.block(h, f), c.block(h, f))).collect();
        assert_eq!(c.p, v.len(), "reference layout consumed a different length");
        RefNet {
            h,
            heads,
            w_emb,
            layers,
        }
    }
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let c = b[0].len();
    let mut out = vec![vec![0.0; c]; n];
    for i in 0..n {
        for j in 0..c {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i][p] * b[p][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn layer_norm(x: &Mat, g: &[f64], b: &[f64]) -> Mat {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mut mean = 0.0;
            for v in row {
                mean += v;
            }
            mean /= n;
            let mut var = 0.0;
            for v in row {
                var += (v - mean) * (v - mean);
            }
            var /= n;
            let sd = (var + 1e-5).sqrt();
            (0..row.len()).map(|k| (row[k] - mean) / sd * g[k] + b[k]).collect()
        })
        .collect()
}

pub fn ref_attn(x: &Mat, p: &Block, heads: usize) -> Mat {
    let l = x.len();
    let h = x[0].len();
    let dk = h / heads;
    let q = matmul(x, &p.wq);
    let k = matmul(x, &p.wk);
    let v = matmul(x, &p.wv);
    let mut concat = vec![vec![0.0; h]; l];
    for hd in 0..heads {
        for i in 0..l {
            let mut scores = vec![0.0; l];
            for j in 0..l {
                let mut s = 0.0;
                for t in 0..dk {
                    s += q[i][hd * dk + t] * k[j][hd * dk + t];
                }
                scores[j] = s / (dk as f64).sqrt();
            }
            let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - mx).exp();
                z += *s;
            }
            for j in 0..l {
                for t in 0..dk {
                    concat[i][hd * dk + t] += scores[j] / z * v[j][hd * dk + t];
                }
            }
        }
    }
    let mhsa = matmul(&concat, &p.wo);
    let mut res = x.clone();
    for i in 0..l {
        for t in 0..h {
            res[i][t] += mhsa[i][t];
        }
    }
    let g = layer_norm(&res, &p.g1, &p.b1);
    let mut hid = matmul(&g, &p.f1w);
    for row in hid.iter_mut() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = (*v + p.f1b[t]).max(0.0);
        }
    }
    let mut ff = matmul(&hid, &p.f2w);
    for (i, row) in ff.iter_mut().enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            *v += p.f2b[t] + g[i][t];
        }
    }
    layer_norm(&ff, &p.g2, &p.b2)
}

/// Returns (F_indiv as m rows, F_pop).
pub fn ref_forward(net: &RefNet, xs: &Mat, ys: &[f64], lb: &[f64], ub: &[f64]) -> (Mat, Vec<f64>) {
    let m = xs.len();
    let d = xs[0].len();
    let h = net.h;
    let ymin = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // s[j][i] = embedding of (x_ij, y_i)
    let mut s: Vec<Mat> = vec![vec![vec![0.0; h]; m]; d];
    for j in 0..d {
        for i in 0..m {
            let px = (xs[i][j] - lb[j]) / (ub[j] - lb[j]);
            let py = if ymax > ymin { (ys[i] - ymin) / (ymax - ymin) } else { 0.5 };
            for t in 0..h {
                s[j][i][t] = px * net.w_emb[0][t] + py * net.w_emb[1][t];
            }
        }
    }
    let mut per_cand: Vec<Mat> = Vec::new();
    for (li, (inter, intra)) in net.layers.iter().enumerate() {
        if li > 0 {
            // back to d x m x h
            s = (0..d).map(|j| (0..m).map(|i| per_cand[i][j].clone()).collect()).collect();
        }
        let hmid: Vec<Mat> = s.iter().map(|slice| ref_attn(slice, inter, net.heads)).collect();
        per_cand = (0..m)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        (0..h)
                            .map(|t| {
                                let pos = j as f64;
                                let k = (t / 2) as f64;
                                let angle = pos / 10000f64.powf(2.0 * k / h as f64);
                                let pe = if t % 2 == 0 { angle.sin() } else { angle.cos() };
                                hmid[j][i][t] + pe
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        per_cand = per_cand.iter().map(|c| ref_attn(c, intra, net.heads)).collect();
    }
    let indiv: Mat = per_cand
        .iter()
        .map(|c| (0..h).map(|t| c.iter().map(|r| r[t]).sum::<f64>() / d as f64).collect())
        .collect();
    let pop = (0..h).map(|t| indiv.iter().map(|r| r[t]).sum::<f64>() / m as f64).collect();
    (indiv, pop)
}
