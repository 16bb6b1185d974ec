//! Embedded published eigenvalue tables for the 2D experiments.

use crate::assembly::Formulation;
use crate::mesh::DomainKind;
use crate::space::Scheme;

use DomainKind::{Disk, Lshape, Square};
use Formulation::{Full, Reduced};
use Scheme::{Bdm, Rt};

/// One eigenvalue row: per-level values, fitted order, extrapolated value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefRow {
    pub values: [f64; 4],
    pub order: f64,
    pub extrapolated: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefEntry {
    pub table: usize,
    pub domain: DomainKind,
    pub scheme: Scheme,
    pub k: usize,
    pub formulation: Formulation,
    pub levels: [usize; 4],
    pub rows: &'static [RefRow],
}

impl RefEntry {
    pub fn key(&self) -> RefKey {
        RefKey { domain: self.domain, scheme: self.scheme, k: self.k, formulation: self.formulation }
    }

    /// Published value at resolution `n`, if that level is tabulated.
    pub fn value_at(&self, row: usize, n: usize) -> Option<f64> {
        let l = self.levels.iter().position(|&m| m == n)?;
        self.rows.get(row).map(|r| r.values[l])
    }

    /// External benchmark eigenvalues quoted alongside the table.
    pub fn benchmark(&self) -> &'static [f64] {
        benchmark(self.domain)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RefKey {
    pub domain: DomainKind,
    pub scheme: Scheme,
    pub k: usize,
    pub formulation: Formulation,
}

impl std::fmt::Display for RefKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} k={} {}", self.domain, self.scheme, self.k, self.formulation)
    }
}

pub const SQUARE_BENCHMARK: [f64; 5] = [13.0860, 23.0308, 23.0308, 32.0443, 38.5252];
pub const SQUARE_BENCHMARK_ALT: [f64; 5] = [13.086, 23.031, 23.031, 32.053, 38.532];
pub const DISK_BENCHMARK: [f64; 5] = [14.68345, 26.37840, 26.37862, 40.71434, 40.71606];

pub fn benchmark(domain: DomainKind) -> &'static [f64] {
    match domain {
        Square => &SQUARE_BENCHMARK,
        Disk => &DISK_BENCHMARK,
        Lshape => &[],
    }
}

const fn row(values: [f64; 4], order: f64, extrapolated: f64) -> RefRow {
    RefRow { values, order, extrapolated }
}

const SQ: [usize; 4] = [10, 20, 30, 40];
const DK: [usize; 4] = [20, 30, 40, 50];
const LS: [usize; 4] = [9, 15, 20, 35];

const T1_K0: [RefRow; 5] = [
    row([12.61618, 12.96634, 13.03637, 13.05313], 2.00, 13.08484),
    row([21.08840, 22.63791, 22.85202, 22.93446], 2.40, 22.99702),
    row([21.33183, 22.69036, 22.88083, 22.93810], 2.46, 22.99245),
    row([27.96811, 31.27226, 31.70100, 31.81983], 2.59, 31.93357),
    row([33.42538, 37.66786, 38.18478, 38.32443], 2.69, 38.44565),
];
const T1_K1: [RefRow; 5] = [
    row([13.08698, 13.08620, 13.08617, 13.08617], 4.56, 13.08617),
    row([23.04310, 23.03182, 23.03123, 23.03114], 4.04, 23.03109),
    row([23.04310, 23.03182, 23.03123, 23.03114], 4.04, 23.03109),
    row([32.07944, 32.05400, 32.05270, 32.05249], 4.07, 32.05239),
    row([38.60095, 38.53594, 38.53227, 38.53165], 3.92, 38.53134),
];
const T1_K2: [RefRow; 5] = [
    row([13.08528, 13.08616, 13.08617, 13.08617], 5.84, 13.08617),
    row([23.03116, 23.03109, 23.03109, 23.03109], 6.00, 23.03109),
    row([23.03116, 23.03109, 23.03109, 23.03109], 6.00, 23.03109),
    row([32.05268, 32.05239, 32.05239, 32.05239], 6.00, 32.05239),
    row([38.53256, 38.53138, 38.53136, 38.53136], 5.97, 38.53136),
];
const T2_K0: [RefRow; 5] = [
    row([13.18205, 13.10744, 13.09534, 13.09127], 2.21, 13.08688),
    row([22.59086, 22.92419, 22.98366, 23.00442], 2.06, 23.02944),
    row([22.59086, 22.92419, 22.98366, 23.00442], 2.06, 23.02944),
    row([31.52148, 31.92201, 31.99384, 32.01930], 2.04, 32.05042),
    row([36.97903, 38.18216, 38.37946, 38.44657], 2.19, 38.51958),
];
const T2_K1: [RefRow; 5] = [
    row([13.08698, 13.08620, 13.08617, 13.08617], 4.56, 13.08617),
    row([23.04310, 23.03182, 23.03123, 23.03114], 4.04, 23.03122),
    row([23.04310, 23.03182, 23.03123, 23.03114], 4.04, 23.03109),
    row([32.07944, 32.05400, 32.05270, 32.05249], 4.07, 32.05239),
    row([38.60095, 38.53594, 38.53227, 38.53165], 3.92, 38.53134),
];
const T2_K2: [RefRow; 5] = [
    row([13.08615, 13.08616, 13.08617, 13.08617], 4.75, 13.08617),
    row([23.03116, 23.03109, 23.03109, 23.03109], 6.00, 23.03109),
    row([23.03116, 23.03109, 23.03109, 23.03109], 6.00, 23.03110),
    row([32.05268, 32.05239, 32.05239, 32.05239], 6.00, 32.05239),
    row([38.53256, 38.53138, 38.53136, 38.53136], 5.92, 38.53136),
];
const T3_K0: [RefRow; 5] = [
    row([13.39520, 13.16477, 13.12123, 13.10591], 1.97, 13.08574),
    row([23.74378, 23.22000, 23.11593, 23.07899], 1.89, 23.02641),
    row([24.19514, 23.32856, 23.16384, 23.10587], 1.96, 23.02865),
    row([33.73344, 32.50272, 32.25523, 32.16703], 1.87, 32.03920),
    row([41.15209, 39.23059, 38.84532, 38.70858], 1.88, 38.51262),
];
const T3_K1: [RefRow; 5] = [
    row([13.08919, 13.08636, 13.08621, 13.08618], 3.99, 13.08617),
    row([23.04441, 23.03195, 23.03126, 23.03115], 3.96, 23.03109),
    row([23.05331, 23.03253, 23.03138, 23.03118], 3.95, 23.03109),
    row([32.10055, 32.05550, 32.05302, 32.05259], 3.92, 32.05238),
    row([38.61259, 38.53671, 38.53243, 38.53170], 3.92, 38.53134),
];
const T3_K2: [RefRow; 5] = [
    row([13.08618, 13.08617, 13.08617, 13.08617], 6.16, 13.08617),
    row([23.03117, 23.03109, 23.03109, 23.03109], 6.04, 23.03109),
    row([23.03128, 23.03110, 23.03109, 23.03109], 6.01, 23.03109),
    row([32.05303, 32.05240, 32.05239, 32.05239], 6.02, 32.05239),
    row([38.53239, 38.53138, 38.53136, 38.53136], 5.92, 38.53136),
];
const T4_K0: [RefRow; 5] = [
    row([13.46029, 13.18088, 13.12837, 13.10993], 1.98, 13.08589),
    row([24.18596, 23.32433, 23.16178, 23.10467], 1.97, 23.02910),
    row([24.18596, 23.32433, 23.16178, 23.10467], 1.97, 23.02910),
    row([34.23489, 32.61702, 32.30485, 32.19470], 1.94, 32.04581),
    row([41.75299, 39.35261, 38.89728, 38.73736], 1.96, 38.52295),
];
const T4_K1: [RefRow; 5] = [
    row([13.08997, 13.08642, 13.08622, 13.08618], 3.93, 13.08617),
    row([23.05092, 23.03240, 23.03135, 23.03118], 3.92, 23.03109),
    row([23.05092, 23.03240, 23.03135, 23.03118], 3.92, 23.03109),
    row([32.10848, 32.05619, 32.05315, 32.05263], 3.88, 32.05237),
    row([38.61788, 38.53707, 38.53250, 38.53172], 3.92, 38.53134),
];
const T4_K2: [RefRow; 5] = [
    row([13.08619, 13.08617, 13.08617, 13.08617], 6.09, 13.08617),
    row([23.03128, 23.03110, 23.03109, 23.03109], 5.97, 23.03109),
    row([23.03128, 23.03110, 23.03109, 23.03109], 5.97, 23.03109),
    row([32.05323, 32.05240, 32.05239, 32.05239], 5.91, 32.05239),
    row([38.53245, 38.53138, 38.53136, 38.53136], 5.92, 38.53136),
];
const T5_K0: [RefRow; 5] = [
    row([14.94827, 14.79867, 14.74712, 14.72354], 2.04, 14.68251),
    row([26.81747, 26.56803, 26.48211, 26.44329], 2.05, 26.37559),
    row([26.81821, 26.56845, 26.48262, 26.44365], 2.06, 26.37683),
    row([41.32838, 40.98177, 40.85915, 40.80453], 2.01, 40.70533),
    row([41.34096, 40.98359, 40.86093, 40.80487], 2.05, 40.70809),
];
const T5_K1: [RefRow; 5] = [
    row([14.94196, 14.79448, 14.74448, 14.72169], 2.08, 14.68323),
    row([26.84091, 26.57657, 26.48686, 26.44594], 2.08, 26.37704),
    row([26.84099, 26.57662, 26.48687, 26.44595], 2.08, 26.37703),
    row([41.42501, 41.01797, 40.87964, 40.81652], 2.08, 40.71046),
    row([41.42543, 41.01805, 40.87966, 40.81654], 2.08, 40.71037),
];
const T5_K2: [RefRow; 5] = [
    row([14.94315, 14.79487, 14.74464, 14.72177], 2.09, 14.68361),
    row([26.84301, 26.57727, 26.48715, 26.44610], 2.08, 26.37680),
    row([26.84303, 26.57728, 26.48716, 26.44610], 2.08, 26.37680),
    row([41.42807, 41.01900, 40.88008, 40.81675], 2.08, 40.71012),
    row([41.42814, 41.01902, 40.88008, 40.81676], 2.08, 40.71010),
];
const T6_K0: [RefRow; 5] = [
    row([14.82469, 14.71768, 14.69784, 14.69090], 2.00, 14.68199),
    row([26.77392, 26.47427, 26.41889, 26.39951], 2.00, 26.37450),
    row([26.77392, 26.47427, 26.41889, 26.39951], 2.00, 26.37450),
    row([41.56881, 40.92423, 40.80343, 40.76105], 1.98, 40.70545),
    row([41.56881, 40.92423, 40.80343, 40.76105], 1.98, 40.70545),
];
const T6_K1: [RefRow; 5] = [
    row([14.70933, 14.68872, 14.68496, 14.68365], 2.02, 14.68199),
    row([26.42481, 26.38682, 26.38000, 26.37764], 2.05, 26.37473),
    row([26.42481, 26.38682, 26.38000, 26.37764], 2.05, 26.37703),
    row([40.78741, 40.72552, 40.71483, 40.71115], 2.11, 40.70686),
    row([40.78741, 40.72552, 40.71483, 40.71115], 2.11, 40.70686),
];
const T6_K2: [RefRow; 5] = [
    row([14.70930, 14.68873, 14.68496, 14.68365], 2.02, 14.68200),
    row([26.42370, 26.38677, 26.38000, 26.37764], 2.02, 26.37467),
    row([26.42370, 26.38677, 26.38000, 26.37764], 2.02, 26.37467),
    row([40.78222, 40.72523, 40.71478, 40.71113], 2.02, 40.70655),
    row([40.78222, 40.72523, 40.71478, 40.71113], 2.02, 40.70655),
];
const T7_RT: [RefRow; 5] = [
    row([29.43565, 30.83700, 31.16193, 31.62598], 1.59, 31.89457),
    row([34.98077, 36.28132, 36.50660, 36.83669], 2.03, 36.94231),
    row([40.70064, 41.43833, 41.62290, 41.83014], 1.73, 41.94524),
    row([46.83830, 48.22776, 48.47328, 48.80875], 2.07, 48.91635),
    row([52.08483, 53.96541, 54.48404, 55.02474], 1.65, 55.37238),
];
const T7_BDM: [RefRow; 5] = [
    row([32.59542, 32.24970, 32.14635, 32.06144], 1.75, 32.00483),
    row([38.76953, 37.57884, 37.32081, 37.11240], 2.26, 37.03276),
    row([44.76985, 42.88018, 42.46067, 42.10765], 2.19, 41.96744),
    row([52.09587, 50.19205, 49.67367, 49.20827], 1.81, 48.93475),
    row([58.84979, 56.72442, 56.20364, 55.63553], 1.79, 55.33628),
];

const fn entry(
    table: usize,
    domain: DomainKind,
    scheme: Scheme,
    k: usize,
    formulation: Formulation,
    levels: [usize; 4],
    rows: &'static [RefRow],
) -> RefEntry {
    RefEntry { table, domain, scheme, k, formulation, levels, rows }
}

static ENTRIES: [RefEntry; 20] = [
    entry(1, Square, Rt, 0, Full, SQ, &T1_K0),
    entry(1, Square, Rt, 1, Full, SQ, &T1_K1),
    entry(1, Square, Rt, 2, Full, SQ, &T1_K2),
    entry(2, Square, Rt, 0, Reduced, SQ, &T2_K0),
    entry(2, Square, Rt, 1, Reduced, SQ, &T2_K1),
    entry(2, Square, Rt, 2, Reduced, SQ, &T2_K2),
    entry(3, Square, Bdm, 0, Full, SQ, &T3_K0),
    entry(3, Square, Bdm, 1, Full, SQ, &T3_K1),
    entry(3, Square, Bdm, 2, Full, SQ, &T3_K2),
    entry(4, Square, Bdm, 0, Reduced, SQ, &T4_K0),
    entry(4, Square, Bdm, 1, Reduced, SQ, &T4_K1),
    entry(4, Square, Bdm, 2, Reduced, SQ, &T4_K2),
    entry(5, Disk, Rt, 0, Full, DK, &T5_K0),
    entry(5, Disk, Rt, 1, Full, DK, &T5_K1),
    entry(5, Disk, Rt, 2, Full, DK, &T5_K2),
    entry(6, Disk, Bdm, 0, Full, DK, &T6_K0),
    entry(6, Disk, Bdm, 1, Full, DK, &T6_K1),
    entry(6, Disk, Bdm, 2, Full, DK, &T6_K2),
    entry(7, Lshape, Rt, 0, Full, LS, &T7_RT),
    entry(7, Lshape, Bdm, 0, Full, LS, &T7_BDM),
];

/// FNV-1a digest of every embedded number and key.
pub const CHECKSUM: u64 = 0x1807_c4d9_1986_4bea;

/// Read-only view of the embedded tables.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceTable {
    entries: &'static [RefEntry],
}

impl ReferenceTable {
    pub fn embedded() -> Self {
        ReferenceTable { entries: &ENTRIES }
    }

    pub fn entries(&self) -> &'static [RefEntry] {
        self.entries
    }

    pub fn get(&self, key: RefKey) -> Option<&'static RefEntry> {
        self.entries.iter().find(|e| e.key() == key)
    }

    pub fn table(&self, n: usize) -> impl Iterator<Item = &'static RefEntry> {
        self.entries.iter().filter(move |e| e.table == n)
    }

    pub fn checksum(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        for e in self.entries {
            feed(e.table as u64);
            feed(e.domain as u64);
            feed(e.scheme as u64);
            feed(e.k as u64);
            feed(e.formulation as u64);
            e.levels.iter().for_each(|&n| feed(n as u64));
            for r in e.rows {
                r.values.iter().for_each(|v| feed(v.to_bits()));
                feed(r.order.to_bits());
                feed(r.extrapolated.to_bits());
            }
        }
        h
    }

    /// True when the embedded data is unmodified.
    pub fn verify(&self) -> bool {
        self.checksum() == CHECKSUM
    }
}
