use deformq::scalar::Cq;
use deformq::symbolic::Poly;
use deformq::symred::*;

pub fn eps(i: usize, j: usize, k: usize) -> i128 {
    ((j as i128 - i as i128) * (k as i128 - i as i128) * (k as i128 - j as i128)) / 2
}

pub fn xs() -> [Poly; 3] {
    let ch = reduction_chart();
    [ch.x("x1"), ch.x("x2"), ch.x("x3")]
}

/// v^j ε_{jki} x^k
pub fn dex(d: &[Poly; 3]) -> [Poly; 3] {
    let x = xs();
    std::array::from_fn(|i| {
        let mut s = Poly::zero();
        for j in 0..3 {
            for k in 0..3 {
                s = s.add(&d[j].mul(&x[k]).scale(&Cq::int(eps(j, k, i))));
            }
        }
        s
    })
}

pub fn v3(spec: &FamilySpec, pre: &str) -> [Poly; 3] {
    std::array::from_fn(|i| spec.get(&format!("{pre}_{}", i + 1)))
}

pub fn add3(a: &[Poly; 3], b: &[Poly; 3]) -> [Poly; 3] {
    std::array::from_fn(|i| a[i].add(&b[i]))
}

pub fn sc3(s: &Poly, a: &[Poly; 3]) -> [Poly; 3] {
    std::array::from_fn(|i| s.mul(&a[i]))
}

pub fn wedge(a: &[Poly; 3], b: &[Poly; 3]) -> [[Poly; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i].mul(&b[j]).sub(&a[j].mul(&b[i]))))
}

pub fn zero_ij() -> [[Poly; 3]; 3] {
    Default::default()
}

/// Transcribed table of O(λ) commutators, divided by iλ.
pub fn table(spec: &FamilySpec) -> ([Poly; 3], [[Poly; 3]; 3]) {
    let ch = reduction_chart();
    let g = |k: &str| spec.get(k);
    let x = xs();
    let t = ch.x("t");
    match spec.family {
        Family::C11 => {
            let (c1, c2) = (v3(spec, "c1"), v3(spec, "c2"));
            (std::array::from_fn(|i| g("X1_0").mul(&c2[i]).sub(&g("X2_0").mul(&c1[i]))), wedge(&c1, &c2))
        }
        Family::C21 => {
            let a = add3(&v3(spec, "c1"), &sc3(&g("f1"), &x));
            (sc3(&g("X2_0").neg(), &a), zero_ij())
        }
        Family::C12 => {
            let d1 = v3(spec, "d1");
            let a = add3(&v3(spec, "c1"), &dex(&d1));
            let c0 = std::array::from_fn(|i| g("X1_0").mul(&g("kappa")).mul(&d1[i]).sub(&g("X2_0").mul(&a[i])));
            (c0, wedge(&a, &sc3(&g("kappa"), &d1)))
        }
        Family::C22 => {
            let a = add3(&add3(&v3(spec, "c1"), &dex(&v3(spec, "d1"))), &sc3(&g("f1"), &x));
            (sc3(&g("X2_0").neg(), &a), zero_ij())
        }
        Family::C32 => {
            let (d1, c2) = (v3(spec, "d1"), v3(spec, "c2"));
            let inv = g("f2").try_inv().unwrap();
            // (1/f₂) d₁ʲc₂ᵏε_{jki}
            let cr: [Poly; 3] = std::array::from_fn(|i| {
                let mut s = Poly::zero();
                for j in 0..3 {
                    for k in 0..3 {
                        s = s.add(&d1[j].mul(&c2[k]).scale(&Cq::int(eps(j, k, i))));
                    }
                }
                s.mul(&inv)
            });
            let a = add3(&cr, &dex(&d1));
            let b = add3(&c2, &sc3(&g("f2"), &x));
            let c0 = std::array::from_fn(|i| g("X1_0").mul(&b[i]).sub(&g("X2_0").mul(&a[i])));
            (c0, wedge(&a, &b))
        }
        Family::B11 => {
            let w = g("c1_0").mul(&g("kappa2")).sub(&g("c2_0").mul(&g("kappa1")));
            (sc3(&w, &dex(&v3(spec, "d"))), zero_ij())
        }
        Family::B21 => {
            let w = g("c1_0").add(&g("N1_0").mul(&t)).mul(&g("kappa2"));
            (sc3(&w, &dex(&v3(spec, "d"))), zero_ij())
        }
        Family::B12 | Family::B22 | Family::B32 => {
            let dx = dex(&v3(spec, "d"));
            let f2x = sc3(&g("f2"), &x);
            let second = add3(&sc3(&g("kappa2"), &dx), &f2x);
            let k1dx = sc3(&g("kappa1"), &dx);
            let cij = wedge(&k1dx, &f2x);
            let c0: [Poly; 3] = match spec.family {
                Family::B12 => std::array::from_fn(|i| g("c1_0").mul(&second[i]).sub(&g("c2_0").mul(&k1dx[i]))),
                Family::B22 => {
                    // instance c₁⁰ = C r³ so r c₁⁰' = 3 C r³
                    let rc1p = g("c1_0").scale(&Cq::int(3));
                    let inv = g("N1_0").try_inv().unwrap();
                    let a = g("c1_0").add(&g("N1_0").mul(&t));
                    std::array::from_fn(|i| a.mul(&second[i]).add(&inv.mul(&g("f2")).mul(&rc1p).mul(&k1dx[i])))
                }
                _ => {
                    let a = g("c2_0").add(&g("N2_0").mul(&t));
                    std::array::from_fn(|i| g("c1_0").mul(&second[i]).sub(&a.mul(&k1dx[i])))
                }
            };
            (c0, cij)
        }
    }
}

/// First entry where `m` differs from the transcribed table, if any.
pub fn table_mismatch(spec: &FamilySpec, m: &[Vec<Poly>]) -> Option<String> {
    let (c0, cij) = table(spec);
    let i = Cq::i();
    for a in 0..4 {
        for b in 0..4 {
            if m[a][b] != m[b][a].neg() {
                return Some(format!("{:?} antisymmetry at ({a}, {b})", spec.family));
            }
        }
    }
    for k in 0..3 {
        if m[0][k + 1] != c0[k].scale(&i) {
            return Some(format!("{:?} c^0{}", spec.family, k + 1));
        }
        for l in 0..3 {
            if m[k + 1][l + 1] != cij[k][l].scale(&i) {
                return Some(format!("{:?} c^{}{}", spec.family, k + 1, l + 1));
            }
        }
    }
    None
}

pub fn assert_matches_table(spec: &FamilySpec, m: &[Vec<Poly>]) {
    if let Some(w) = table_mismatch(spec, m) {
        panic!("{w}");
    }
}

pub fn b22_instance() -> FamilySpec {
    let ch = reduction_chart();
    commuting_instance(Family::B22).with("c1_0", ch.p("C").mul(&ch.radius().unwrap().pow(3).unwrap()))
}

/// Spec whose rows the table covers: generic where the family allows it.
pub fn table_spec(fam: Family) -> FamilySpec {
    match fam {
        Family::B12 | Family::B32 => commuting_instance(fam),
        Family::B22 => b22_instance(),
        _ => FamilySpec::generic(fam),
    }
}

/// Spec whose fields commute, so a twist can be built from it.
pub fn twist_spec(fam: Family) -> FamilySpec {
    match fam {
        Family::B22 => b22_instance(),
        _ => commuting_instance(fam),
    }
}
