//! Unscrambled Sobol' sequence with Joe-Kuo (new-joe-kuo-6.21201) direction
//! numbers, generated in Gray-code order. Point 0 is the origin.

const BITS: u32 = 32;

/// Primitive polynomial (with both end bits) and initial m values for
/// dimensions 1.. ; dimension 0 is the van der Corput sequence.
const DIRECTIONS: &[(u32, &[u32])] = &[
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
    (137, &[1, 3, 7, 13, 13, 15, 69]),
    (143, &[1, 1, 3, 13, 7, 35, 63]),
    (145, &[1, 3, 5, 9, 1, 25, 53]),
    (157, &[1, 3, 1, 13, 9, 35, 107]),
    (167, &[1, 3, 1, 5, 27, 61, 31]),
    (171, &[1, 1, 5, 11, 19, 41, 61]),
    (185, &[1, 3, 5, 3, 3, 13, 69]),
    (191, &[1, 1, 7, 13, 1, 19, 1]),
    (193, &[1, 3, 7, 5, 13, 19, 59]),
    (203, &[1, 1, 3, 9, 25, 29, 41]),
    (211, &[1, 3, 5, 13, 23, 1, 55]),
    (213, &[1, 3, 7, 3, 13, 59, 17]),
    (229, &[1, 3, 1, 3, 5, 53, 69]),
    (239, &[1, 1, 5, 5, 23, 33, 13]),
    (241, &[1, 1, 7, 7, 1, 61, 123]),
    (247, &[1, 1, 7, 9, 13, 61, 49]),
    (253, &[1, 3, 3, 5, 3, 55, 33]),
    (285, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (299, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (301, &[1, 3, 1, 11, 11, 11, 77, 249]),
    (333, &[1, 3, 1, 11, 27, 43, 71, 9]),
    (351, &[1, 1, 7, 15, 21, 11, 81, 45]),
    (355, &[1, 3, 7, 3, 25, 31, 65, 79]),
    (357, &[1, 3, 1, 1, 19, 11, 3, 205]),
    (361, &[1, 1, 5, 9, 19, 21, 29, 157]),
    (369, &[1, 3, 7, 11, 1, 33, 89, 185]),
    (391, &[1, 3, 3, 3, 15, 9, 79, 71]),
    (397, &[1, 3, 7, 11, 15, 39, 119, 27]),
    (425, &[1, 1, 3, 1, 11, 31, 97, 225]),
    (451, &[1, 1, 1, 3, 23, 43, 57, 177]),
    (463, &[1, 3, 7, 7, 17, 17, 37, 71]),
    (487, &[1, 3, 1, 5, 27, 63, 123, 213]),
    (501, &[1, 1, 3, 5, 11, 43, 53, 133]),
    (529, &[1, 3, 5, 5, 29, 17, 47, 173, 479]),
    (539, &[1, 3, 3, 11, 3, 1, 109, 9, 69]),
    (545, &[1, 1, 1, 5, 17, 39, 23, 5, 343]),
    (557, &[1, 3, 1, 5, 25, 15, 31, 103, 499]),
    (563, &[1, 1, 1, 11, 11, 17, 63, 105, 183]),
    (601, &[1, 1, 5, 11, 9, 29, 97, 231, 363]),
    (607, &[1, 1, 5, 15, 19, 45, 41, 7, 383]),
    (617, &[1, 3, 7, 7, 31, 19, 83, 137, 221]),
    (623, &[1, 1, 1, 3, 23, 15, 111, 223, 83]),
    (631, &[1, 1, 5, 13, 31, 15, 55, 25, 161]),
    (637, &[1, 1, 3, 13, 25, 47, 39, 87, 257]),
];

pub const MAX_DIMS: usize = DIRECTIONS.len() + 1;

#[derive(Clone, Debug)]
pub struct Sobol {
    v: Vec<[u32; BITS as usize]>,
    x: Vec<u32>,
    index: u64,
}

impl Sobol {
    /// Panics if `dims` is zero or above [`MAX_DIMS`].
    pub fn new(dims: usize) -> Sobol {
        assert!(
            (1..=MAX_DIMS).contains(&dims),
            "Sobol' dimension {dims} out of range"
        );
        let mut v = vec![[0u32; BITS as usize]; dims];
        for (j, slot) in v[0].iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - j as u32);
        }
        for (d, row) in v.iter_mut().enumerate().skip(1) {
            let (poly, init) = DIRECTIONS[d - 1];
            let s = init.len();
            let mut m = vec![0u32; BITS as usize];
            m[..s].copy_from_slice(init);
            for j in s..BITS as usize {
                let mut next = m[j - s] ^ (m[j - s] << s);
                for k in 1..s {
                    if (poly >> (s - k)) & 1 == 1 {
                        next ^= m[j - k] << k;
                    }
                }
                m[j] = next;
            }
            for j in 0..BITS as usize {
                row[j] = m[j] << (BITS - 1 - j as u32);
            }
        }
        Sobol {
            v,
            x: vec![0; dims],
            index: 0,
        }
    }

    pub fn dims(&self) -> usize {
        self.v.len()
    }

    /// Returns the next point in `[0, 1)^dims`.
    pub fn next_point(&mut self) -> Vec<f64> {
        let out = self.x.iter().map(|&x| x as f64 / (1u64 << BITS) as f64).collect();
        let c = self.index.trailing_ones() as usize;
        for (x, v) in self.x.iter_mut().zip(&self.v) {
            *x ^= v[c];
        }
        self.index += 1;
        out
    }

    pub fn skip(&mut self, n: u64) {
        for _ in 0..n {
            self.next_point();
        }
    }
}
