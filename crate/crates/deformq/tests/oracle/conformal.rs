use std::sync::Arc;

use deformq::ncgeo::FrameBundle;
use deformq::scalar::Q;
use deformq::symbolic::{Chart, Poly};
use deformq::twist::{AbelianTwist, PSeries, StarContext, VectorField};

pub fn diag(entries: Vec<Poly>) -> Vec<Vec<Poly>> {
    let n = entries.len();
    let mut m = vec![vec![Poly::zero(); n]; n];
    for (i, e) in entries.into_iter().enumerate() {
        m[i][i] = e;
    }
    m
}

fn minkowski_moyal(metric: Vec<Vec<Poly>>, ch: &Arc<Chart>, order: usize) -> FrameBundle {
    let frame: Vec<VectorField> = ch.coord_names().iter().map(|c| VectorField::partial(ch, c).unwrap()).collect();
    let twist = AbelianTwist::canonical(ch, frame.clone(), order).unwrap();
    let names = (1..=4).map(|a| format!("theta{a}")).collect();
    FrameBundle::new(twist, frame, names, metric, Poly::one()).unwrap()
}

pub struct ConformalMoyal {
    pub ch: Arc<Chart>,
    pub ctx: StarContext,
    pub fb: FrameBundle,
    pub phi: Poly,
    pub u: Vec<PSeries>,
}

pub const N: usize = 4;

pub fn eta(i: usize) -> i128 {
    if i == 0 {
        -1
    } else {
        1
    }
}

pub fn conformal_moyal(order: usize) -> ConformalMoyal {
    let ch = Arc::new(Chart::new("mink", &["t", "x1", "x2", "x3"], &[]).unwrap());
    let phi = ch.func("Phi");
    let metric = diag((0..N).map(|i| phi.scale_q(&Q::from_integer(eta(i)))).collect());
    let fb = minkowski_moyal(metric, &ch, order);
    let ctx = fb.context();
    let inv = ctx.star_inverse(&phi).unwrap();
    let xs = ch.coord_ids();
    let u = (0..N)
        .map(|m| ctx.star_series(&inv, &ctx.series(phi.diff(xs[m]))).scale(&Q::new(1, 2)))
        .collect();
    ConformalMoyal { ch, ctx, fb, phi, u }
}

pub fn dser(s: &PSeries, x: deformq::symbolic::AtomId) -> PSeries {
    s.map(|p| p.diff(x))
}

impl ConformalMoyal {
    fn up(&self, r: usize) -> PSeries {
        self.u[r].scale(&Q::from_integer(eta(r)))
    }

    fn div(&self) -> PSeries {
        let xs = self.ch.coord_ids();
        (0..N).fold(PSeries::zero(self.order()), |acc, r| acc.add(&dser(&self.up(r), xs[r])))
    }

    fn uu(&self) -> PSeries {
        (0..N).fold(PSeries::zero(self.order()), |acc, r| acc.add(&self.ctx.star_series(&self.u[r], &self.up(r))))
    }

    pub fn order(&self) -> usize {
        self.u[0].order()
    }

    /// Γ_{mn}^r = δ_n^r u_m + δ_m^r u_n − η_{mn} u^r
    pub fn christoffel(&self, m: usize, n: usize, r: usize) -> PSeries {
        let mut e = PSeries::zero(self.order());
        if n == r {
            e = e.add(&self.u[m]);
        }
        if m == r {
            e = e.add(&self.u[n]);
        }
        if m == n {
            e = e.sub(&self.up(r).scale(&Q::from_integer(eta(m))));
        }
        e
    }

    pub fn ricci(&self, m: usize, n: usize) -> PSeries {
        let xs = self.ch.coord_ids();
        let nn = Q::from_integer(N as i128);
        let one = Q::from_integer(1);
        let two = Q::from_integer(2);
        let mut e = dser(&self.u[m], xs[n])
            .sub(&dser(&self.u[n], xs[m]).scale(&(nn - one)))
            .add(&self.ctx.star_series(&self.u[m], &self.u[n]).scale(&(nn - two)));
        if m == n {
            let h = Q::from_integer(eta(m));
            e = e.sub(&self.div().scale(&h)).sub(&self.uu().scale(&(h * (nn - two))));
        }
        e
    }

    pub fn scalar(&self) -> PSeries {
        let nn = Q::from_integer(N as i128);
        let one = Q::from_integer(1);
        let two = Q::from_integer(2);
        let inner = self.div().scale(&(two * (one - nn))).sub(&self.uu().scale(&((nn - two) * (nn - one))));
        let inv = self.ctx.star_inverse(&self.phi).unwrap();
        self.ctx.star_series(&inv, &inner)
    }
}
