use std::hash::{Hash, Hasher};

use super::AtomId;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(ids: &[AtomId]) -> u64 {
    let mut h = FNV_OFFSET;
    for id in ids {
        for b in id.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// A closed-world state: the strictly increasing ids of its true atoms.
///
/// The 64-bit FNV-1a hash is computed once at construction; equality still
/// compares the full atom list.
#[derive(Clone, Debug, Eq)]
pub struct State {
    atoms: Box<[AtomId]>,
    hash: u64,
}

impl State {
    pub fn new(mut atoms: Vec<AtomId>) -> Self {
        atoms.sort_unstable();
        atoms.dedup();
        Self::from_sorted(atoms)
    }

    pub(crate) fn from_sorted(atoms: Vec<AtomId>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        let hash = fnv1a(&atoms);
        State {
            atoms: atoms.into_boxed_slice(),
            hash,
        }
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    /// `sorted` must be sorted ascending.
    pub fn contains_all(&self, sorted: &[AtomId]) -> bool {
        let mut it = self.atoms.iter();
        'outer: for want in sorted {
            for have in it.by_ref() {
                if have == want {
                    continue 'outer;
                }
                if have > want {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn hash64(&self) -> u64 {
        self.hash
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.atoms == other.atoms
    }
}

impl Hash for State {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}
