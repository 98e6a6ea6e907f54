//! Labelled multi-dimensional tables used as DPOP-style messages.
//!
//! An axis carries a label (a variable or an opaque codename) and the ordered
//! list of symbols along it (value indices or value codenames). Entries are
//! stored row-major with the first axis most significant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::VarId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Var(VarId),
    Code(u128),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Value(u32),
    Code(u128),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub label: Label,
    pub symbols: Vec<Symbol>,
}

impl Axis {
    /// A variable axis over value indices `0..size`.
    pub fn var(v: VarId, size: usize) -> Self {
        Axis { label: Label::Var(v), symbols: (0..size as u32).map(Symbol::Value).collect() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("label {0:?} appears in both tables with different symbols")]
    DomainMismatch(Label),
    #[error("label {0:?} is not in the table")]
    MissingLabel(Label),
    #[error("symbol {0:?} cannot be resolved")]
    UnknownSymbol(Symbol),
    #[error("table has {got} entries, axes require {expected}")]
    Shape { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table<T> {
    axes: Vec<Axis>,
    entries: Vec<T>,
}

fn strides(axes: &[Axis]) -> Vec<usize> {
    let mut s = vec![1; axes.len()];
    for k in (0..axes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * axes[k + 1].len();
    }
    s
}

fn decode(mut idx: usize, axes: &[Axis], out: &mut [usize]) {
    for k in (0..axes.len()).rev() {
        let d = axes[k].len();
        out[k] = idx % d;
        idx /= d;
    }
}

impl<T> Table<T> {
    pub fn new(axes: Vec<Axis>, entries: Vec<T>) -> Result<Self, TableError> {
        let expected: usize = axes.iter().map(Axis::len).product();
        if entries.len() != expected {
            return Err(TableError::Shape { expected, got: entries.len() });
        }
        Ok(Table { axes, entries })
    }

    pub fn scalar(value: T) -> Self {
        Table { axes: Vec::new(), entries: vec![value] }
    }

    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = axes.iter().map(Axis::len).product();
        let mut coords = vec![0; axes.len()];
        let entries = (0..len)
            .map(|i| {
                decode(i, &axes, &mut coords);
                f(&coords)
            })
            .collect();
        Table { axes, entries }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.axes.iter().map(|a| a.label)
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.axes.iter().position(|a| a.label == label)
    }

    pub fn axis(&self, label: Label) -> Option<&Axis> {
        self.axes.iter().find(|a| a.label == label)
    }

    pub fn get(&self, coords: &[usize]) -> &T {
        let mut idx = 0;
        for (c, a) in coords.iter().zip(&self.axes) {
            idx = idx * a.len() + c;
        }
        &self.entries[idx]
    }

    /// Entry at the given symbol for each label; every axis must be covered.
    pub fn lookup(&self, at: &[(Label, Symbol)]) -> Option<&T> {
        let mut coords = Vec::with_capacity(self.axes.len());
        for a in &self.axes {
            let (_, s) = at.iter().find(|(l, _)| *l == a.label)?;
            coords.push(a.symbols.iter().position(|x| x == s)?);
        }
        Some(self.get(&coords))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Table<U> {
        Table { axes: self.axes.clone(), entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map<U, E>(&self, f: impl FnMut(&T) -> Result<U, E>) -> Result<Table<U>, E> {
        Ok(Table { axes: self.axes.clone(), entries: self.entries.iter().map(f).collect::<Result<_, _>>()? })
    }

    /// Visits every entry together with its coordinates.
    pub fn for_each_indexed(&mut self, mut f: impl FnMut(&[usize], &mut T)) {
        let mut coords = vec![0; self.axes.len()];
        for (i, e) in self.entries.iter_mut().enumerate() {
            decode(i, &self.axes, &mut coords);
            f(&coords, e);
        }
    }

    /// Combines two tables pointwise over the union of their scopes. The
    /// result keeps this table's axes first, then the other's new axes.
    pub fn join<U, V>(&self, other: &Table<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Table<V>, TableError> {
        let mut axes = self.axes.clone();
        let mut other_pos = Vec::with_capacity(other.axes.len());
        for a in &other.axes {
            match axes.iter().position(|b| b.label == a.label) {
                Some(p) => {
                    if axes[p].symbols != a.symbols {
                        return Err(TableError::DomainMismatch(a.label));
                    }
                    other_pos.push(p);
                }
                None => {
                    axes.push(a.clone());
                    other_pos.push(axes.len() - 1);
                }
            }
        }
        let self_strides = strides(&self.axes);
        let other_strides = strides(&other.axes);
        let len: usize = axes.iter().map(Axis::len).product();
        let mut coords = vec![0; axes.len()];
        let mut entries = Vec::with_capacity(len);
        for i in 0..len {
            decode(i, &axes, &mut coords);
            let si: usize = (0..self.axes.len()).map(|k| coords[k] * self_strides[k]).sum();
            let oi: usize = other_pos.iter().enumerate().map(|(k, p)| coords[*p] * other_strides[k]).sum();
            entries.push(f(&self.entries[si], &other.entries[oi]));
        }
        Ok(Table { axes, entries })
    }

    /// Eliminates one axis, folding the entries along it with `f`.
    pub fn fold_axis<R>(&self, label: Label, mut f: impl FnMut(&[&T]) -> R) -> Result<Table<R>, TableError> {
        let p = self.position(label).ok_or(TableError::MissingLabel(label))?;
        let st = strides(&self.axes);
        let d = self.axes[p].len();
        let mut axes = self.axes.clone();
        axes.remove(p);
        let len: usize = axes.iter().map(Axis::len).product();
        let mut coords = vec![0; axes.len()];
        let mut slice = Vec::with_capacity(d);
        let mut entries = Vec::with_capacity(len);
        for i in 0..len {
            decode(i, &axes, &mut coords);
            let mut base = 0;
            for (k, c) in coords.iter().enumerate() {
                let orig = if k < p { k } else { k + 1 };
                base += c * st[orig];
            }
            slice.clear();
            for j in 0..d {
                slice.push(&self.entries[base + j * st[p]]);
            }
            entries.push(f(&slice));
        }
        Ok(Table { axes, entries })
    }

    /// Replaces the axis `from` by an axis labelled `to` whose symbols are the
    /// positions `0..size` reached through `resolve`. If `to` is already
    /// present, the two axes collapse onto their diagonal.
    pub fn resolve_axis(
        &self,
        from: Label,
        to: Label,
        to_symbols: &[Symbol],
        mut resolve: impl FnMut(Symbol) -> Option<usize>,
    ) -> Result<Table<T>, TableError>
    where
        T: Clone,
    {
        let p = self.position(from).ok_or(TableError::MissingLabel(from))?;
        let mut inverse = vec![None; to_symbols.len()];
        for (j, s) in self.axes[p].symbols.iter().enumerate() {
            let k = resolve(*s).ok_or(TableError::UnknownSymbol(*s))?;
            if k >= to_symbols.len() || inverse[k].is_some() {
                return Err(TableError::UnknownSymbol(*s));
            }
            inverse[k] = Some(j);
        }
        let inverse: Vec<usize> =
            inverse.into_iter().map(|x| x.ok_or(TableError::DomainMismatch(to))).collect::<Result<_, _>>()?;
        let existing = self.position(to).filter(|q| *q != p);
        if let Some(q) = existing {
            if self.axes[q].symbols != to_symbols {
                return Err(TableError::DomainMismatch(to));
            }
        }
        let mut axes = self.axes.clone();
        axes[p] = Axis { label: to, symbols: to_symbols.to_vec() };
        if let Some(q) = existing {
            axes.remove(p);
            let st = strides(&self.axes);
            let len: usize = axes.iter().map(Axis::len).product();
            let mut coords = vec![0; axes.len()];
            let mut entries = Vec::with_capacity(len);
            for i in 0..len {
                decode(i, &axes, &mut coords);
                let mut idx = 0;
                for (k, c) in coords.iter().enumerate() {
                    let orig = if k < p { k } else { k + 1 };
                    idx += c * st[orig];
                }
                let qc = coords[if q < p { q } else { q - 1 }];
                idx += inverse[qc] * st[p];
                entries.push(self.entries[idx].clone());
            }
            return Ok(Table { axes, entries });
        }
        let st = strides(&self.axes);
        let len = self.entries.len();
        let mut coords = vec![0; axes.len()];
        let mut entries = Vec::with_capacity(len);
        for i in 0..len {
            decode(i, &axes, &mut coords);
            let mut idx = 0;
            for (k, c) in coords.iter().enumerate() {
                idx += if k == p { inverse[*c] } else { *c } * st[k];
            }
            entries.push(self.entries[idx].clone());
        }
        Ok(Table { axes, entries })
    }

    /// Relabels an axis and reorders it so that position `j` holds what was at
    /// position `perm[j]`.
    pub fn permute_axis(
        &self,
        from: Label,
        to: Label,
        perm: &[usize],
        symbols: Vec<Symbol>,
    ) -> Result<Table<T>, TableError>
    where
        T: Clone,
    {
        let p = self.position(from).ok_or(TableError::MissingLabel(from))?;
        if perm.len() != self.axes[p].len() || symbols.len() != perm.len() {
            return Err(TableError::DomainMismatch(from));
        }
        let mut axes = self.axes.clone();
        axes[p] = Axis { label: to, symbols };
        let st = strides(&self.axes);
        let mut coords = vec![0; axes.len()];
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.entries.len() {
            decode(i, &axes, &mut coords);
            let mut idx = 0;
            for (k, c) in coords.iter().enumerate() {
                idx += if k == p { perm[*c] } else { *c } * st[k];
            }
            entries.push(self.entries[idx].clone());
        }
        Ok(Table { axes, entries })
    }

    /// Reorders the axes to follow `order`, which must be a permutation of the labels.
    pub fn transpose(&self, order: &[Label]) -> Result<Table<T>, TableError>
    where
        T: Clone,
    {
        let mut axes = Vec::with_capacity(order.len());
        for l in order {
            axes.push(self.axis(*l).ok_or(TableError::MissingLabel(*l))?.clone());
        }
        if axes.len() != self.axes.len() {
            return Err(TableError::Shape { expected: self.axes.len(), got: axes.len() });
        }
        let st = strides(&self.axes);
        let pos: Vec<usize> = order.iter().map(|l| self.position(*l).expect("checked")).collect();
        Ok(Table::from_fn(axes, |c| {
            let idx: usize = c.iter().zip(&pos).map(|(x, p)| x * st[*p]).sum();
            self.entries[idx].clone()
        }))
    }
}

impl<T: Ord + Clone> Table<T> {
    /// Minimum over `label` with ties broken by the lowest position, returning
    /// the projected table and the argmin table.
    pub fn project_min(&self, label: Label) -> Result<(Table<T>, Table<usize>), TableError> {
        let both = self.fold_axis(label, |s| {
            let mut best = 0;
            for (j, v) in s.iter().enumerate().skip(1) {
                if *v < s[best] {
                    best = j;
                }
            }
            (s[best].clone(), best)
        })?;
        Ok((both.map(|(v, _)| v.clone()), both.map(|(_, a)| *a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Label {
        Label::Var(VarId(i))
    }

    #[test]
    fn join_sums_over_union() {
        let a = Table::from_fn(vec![Axis::var(VarId(0), 2)], |c| c[0] as u32);
        let b =
            Table::from_fn(vec![Axis::var(VarId(1), 3), Axis::var(VarId(0), 2)], |c| 10 * c[0] as u32 + c[1] as u32);
        let j = a.join(&b, |x, y| x + y).unwrap();
        assert_eq!(j.labels().collect::<Vec<_>>(), [v(0), v(1)]);
        for x0 in 0..2 {
            for x1 in 0..3 {
                assert_eq!(*j.get(&[x0, x1]), x0 as u32 + 10 * x1 as u32 + x0 as u32);
            }
        }
    }

    #[test]
    fn join_rejects_mismatched_symbols() {
        let a = Table::from_fn(vec![Axis::var(VarId(0), 2)], |_| 0u8);
        let b = Table::from_fn(vec![Axis::var(VarId(0), 3)], |_| 0u8);
        assert_eq!(a.join(&b, |x, y| x + y), Err(TableError::DomainMismatch(v(0))));
    }

    #[test]
    fn project_min_ties_take_lowest() {
        let t = Table::new(vec![Axis::var(VarId(0), 2), Axis::var(VarId(1), 3)], vec![2u32, 1, 1, 0, 5, 0]).unwrap();
        let (m, arg) = t.project_min(v(1)).unwrap();
        assert_eq!(m.entries(), &[1, 0]);
        assert_eq!(arg.entries(), &[1, 0]);
        let (m, arg) = t.project_min(v(0)).unwrap();
        assert_eq!(m.entries(), &[0, 1, 0]);
        assert_eq!(arg.entries(), &[1, 0, 1]);
    }

    #[test]
    fn resolve_reorders_and_collapses() {
        let code = Label::Code(7);
        let syms = vec![Symbol::Code(30), Symbol::Code(10), Symbol::Code(20)];
        let t =
            Table::new(vec![Axis { label: code, symbols: syms }, Axis::var(VarId(1), 2)], vec![3u32, 4, 1, 2, 5, 6])
                .unwrap();
        let target = Axis::var(VarId(0), 3);
        let r = t
            .resolve_axis(code, v(0), &target.symbols, |s| match s {
                Symbol::Code(c) => Some((c / 10 - 1) as usize),
                _ => None,
            })
            .unwrap();
        assert_eq!(r.labels().collect::<Vec<_>>(), [v(0), v(1)]);
        assert_eq!(r.entries(), &[1, 2, 5, 6, 3, 4]);

        // a second coded copy of the same variable collapses onto the diagonal
        let code2 = Label::Code(8);
        let u = Table::from_fn(
            vec![
                Axis::var(VarId(0), 3),
                Axis { label: code2, symbols: vec![Symbol::Code(1), Symbol::Code(0), Symbol::Code(2)] },
            ],
            |c| (10 * c[0] + c[1]) as u32,
        );
        let d = u
            .resolve_axis(code2, v(0), &target.symbols, |s| match s {
                Symbol::Code(c) => Some(c as usize),
                _ => None,
            })
            .unwrap();
        assert_eq!(d.labels().collect::<Vec<_>>(), [v(0)]);
        // value 0 sits at coded position 1, value 1 at 0, value 2 at 2
        assert_eq!(d.entries(), &[1, 10, 22]);
    }

    #[test]
    fn permute_then_resolve_is_identity() {
        let t = Table::from_fn(vec![Axis::var(VarId(0), 3), Axis::var(VarId(1), 2)], |c| (c[0] * 2 + c[1]) as u32);
        let codes = [Symbol::Code(100), Symbol::Code(200), Symbol::Code(300)];
        let perm = [2usize, 0, 1];
        let coded = t.permute_axis(v(0), Label::Code(5), &perm, perm.iter().map(|i| codes[*i]).collect()).unwrap();
        let back = coded
            .resolve_axis(Label::Code(5), v(0), &Axis::var(VarId(0), 3).symbols, |s| codes.iter().position(|c| *c == s))
            .unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn transpose_and_lookup() {
        let t = Table::from_fn(vec![Axis::var(VarId(0), 2), Axis::var(VarId(1), 3)], |c| (c[0] * 3 + c[1]) as u32);
        let u = t.transpose(&[v(1), v(0)]).unwrap();
        assert_eq!(*u.get(&[2, 1]), 5);
        assert_eq!(u.lookup(&[(v(0), Symbol::Value(1)), (v(1), Symbol::Value(2))]), Some(&5));
    }
}
