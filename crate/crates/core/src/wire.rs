//! Protocol messages, their canonical binary encoding and the content
//! summary the privacy auditor inspects.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::crypto::{put_uint, Cyphertext};
use crate::model::VarId;
use crate::table::{Axis, Label, Symbol, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MsgKind {
    Score,
    Token,
    Ids,
    Prev,
    Last,
    Codes,
    Key,
    Feas,
    Decision,
    Share,
    Vect,
    Decr,
    Abort,
    Init,
}

impl MsgKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::Score => "SCORE",
            MsgKind::Token => "TOKEN",
            MsgKind::Ids => "IDS",
            MsgKind::Prev => "PREV",
            MsgKind::Last => "LAST",
            MsgKind::Codes => "CODES",
            MsgKind::Key => "KEY",
            MsgKind::Feas => "FEAS",
            MsgKind::Decision => "DECISION",
            MsgKind::Share => "SHARE",
            MsgKind::Vect => "VECT",
            MsgKind::Decr => "DECR",
            MsgKind::Abort => "ABORT",
            MsgKind::Init => "INIT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Msg {
    /// Leader election wave (`echo == false`) or its echo.
    Score {
        echo: bool,
        score: u128,
    },
    Token {
        epoch: u32,
        token: Token,
    },
    Ids(Ids),
    Prev {
        epoch: u32,
        inner: Box<Msg>,
    },
    Last {
        epoch: u32,
        inner: Box<Msg>,
    },
    Codes {
        epoch: u32,
        codes: CodePackage,
    },
    Key {
        epoch: u32,
        key: Vec<BigUint>,
    },
    Feas {
        epoch: u32,
        table: FeasTable,
    },
    Decision {
        epoch: u32,
        values: Vec<(Label, Symbol)>,
    },
    Share {
        y: BigUint,
    },
    Vect {
        owner: u128,
        round: u8,
        entries: Vec<Cyphertext>,
    },
    Decr {
        epoch: u32,
        ticket: u128,
        c: Cyphertext,
    },
    Abort {
        epoch: u32,
    },
    /// Marks the start of a linear propagation at the last variable.
    Init {
        epoch: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Token {
    Announce { code: u128 },
    Visit { visited: Vec<u128> },
    Return { visited: Vec<u128> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ids {
    Down { next: u64 },
    Up { next: u64 },
    Total { n_plus: u64 },
}

/// Codename of a variable plus codenames for its values, and the permutation
/// the recipient applies to the coded values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodePackage {
    pub var_code: u128,
    pub domain_codes: Vec<u128>,
    pub perm: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasTable {
    Plain(Table<u64>),
    Obfuscated(Table<BigUint>),
    Encrypted(Table<Cyphertext>),
    Shadow(Table<bool>),
}

impl FeasTable {
    pub fn axes(&self) -> &[Axis] {
        match self {
            FeasTable::Plain(t) => t.axes(),
            FeasTable::Obfuscated(t) => t.axes(),
            FeasTable::Encrypted(t) => t.axes(),
            FeasTable::Shadow(t) => t.axes(),
        }
    }
}

/// Something a payload reveals in cleartext.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mention {
    VarName(VarId),
    Value(VarId),
    Assignment(VarId),
    /// Coded (label, value) pair in a decision payload.
    CodedAssignment(u128, u128),
    PlainFeasibility,
}

impl Msg {
    pub fn kind(&self) -> MsgKind {
        match self {
            Msg::Score { .. } => MsgKind::Score,
            Msg::Token { .. } => MsgKind::Token,
            Msg::Ids(_) => MsgKind::Ids,
            Msg::Prev { .. } => MsgKind::Prev,
            Msg::Last { .. } => MsgKind::Last,
            Msg::Codes { .. } => MsgKind::Codes,
            Msg::Key { .. } => MsgKind::Key,
            Msg::Feas { .. } => MsgKind::Feas,
            Msg::Decision { .. } => MsgKind::Decision,
            Msg::Share { .. } => MsgKind::Share,
            Msg::Vect { .. } => MsgKind::Vect,
            Msg::Decr { .. } => MsgKind::Decr,
            Msg::Abort { .. } => MsgKind::Abort,
            Msg::Init { .. } => MsgKind::Init,
        }
    }

    /// Kind of the innermost payload, looking through routing wrappers.
    pub fn inner_kind(&self) -> MsgKind {
        match self {
            Msg::Prev { inner, .. } | Msg::Last { inner, .. } => inner.inner_kind(),
            m => m.kind(),
        }
    }

    pub fn innermost(&self) -> &Msg {
        match self {
            Msg::Prev { inner, .. } | Msg::Last { inner, .. } => inner.innermost(),
            m => m,
        }
    }

    pub fn mentions(&self) -> Vec<Mention> {
        let mut out = Vec::new();
        self.collect_mentions(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_mentions(&self, out: &mut Vec<Mention>) {
        match self {
            Msg::Prev { inner, .. } | Msg::Last { inner, .. } => inner.collect_mentions(out),
            Msg::Feas { table, .. } => {
                for a in table.axes() {
                    if let Label::Var(v) = a.label {
                        out.push(Mention::VarName(v));
                        if a.symbols.iter().any(|s| matches!(s, Symbol::Value(_))) {
                            out.push(Mention::Value(v));
                        }
                    }
                }
                if matches!(table, FeasTable::Plain(_) | FeasTable::Shadow(_)) {
                    out.push(Mention::PlainFeasibility);
                }
            }
            Msg::Decision { values, .. } => {
                for (l, s) in values {
                    match (l, s) {
                        (Label::Var(v), _) => {
                            out.push(Mention::VarName(*v));
                            out.push(Mention::Assignment(*v));
                        }
                        (Label::Code(c), Symbol::Code(d)) => out.push(Mention::CodedAssignment(*c, *d)),
                        (Label::Code(_), Symbol::Value(_)) => {}
                    }
                }
            }
            _ => {}
        }
    }

    /// Canonical binary encoding; its length is the message size.
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.kind() as u8);
        match self {
            Msg::Score { echo, score } => {
                out.push(u8::from(*echo));
                out.extend_from_slice(&score.to_be_bytes());
            }
            Msg::Token { epoch, token } => {
                put_u32(out, *epoch);
                match token {
                    Token::Announce { code } => {
                        out.push(0);
                        out.extend_from_slice(&code.to_be_bytes());
                    }
                    Token::Visit { visited } | Token::Return { visited } => {
                        out.push(if matches!(token, Token::Visit { .. }) { 1 } else { 2 });
                        put_u32(out, visited.len() as u32);
                        for c in visited {
                            out.extend_from_slice(&c.to_be_bytes());
                        }
                    }
                }
            }
            Msg::Ids(ids) => {
                let (tag, x) = match ids {
                    Ids::Down { next } => (0, next),
                    Ids::Up { next } => (1, next),
                    Ids::Total { n_plus } => (2, n_plus),
                };
                out.push(tag);
                out.extend_from_slice(&x.to_be_bytes());
            }
            Msg::Prev { epoch, inner } | Msg::Last { epoch, inner } => {
                put_u32(out, *epoch);
                inner.encode(out);
            }
            Msg::Codes { epoch, codes } => {
                put_u32(out, *epoch);
                out.extend_from_slice(&codes.var_code.to_be_bytes());
                put_u32(out, codes.domain_codes.len() as u32);
                for c in &codes.domain_codes {
                    out.extend_from_slice(&c.to_be_bytes());
                }
                for p in &codes.perm {
                    put_u32(out, *p);
                }
            }
            Msg::Key { epoch, key } => {
                put_u32(out, *epoch);
                put_u32(out, key.len() as u32);
                for k in key {
                    put_uint(out, k);
                }
            }
            Msg::Feas { epoch, table } => {
                put_u32(out, *epoch);
                match table {
                    FeasTable::Plain(t) => {
                        out.push(0);
                        encode_table(out, t, |o, e| o.extend_from_slice(&e.to_be_bytes()));
                    }
                    FeasTable::Obfuscated(t) => {
                        out.push(1);
                        encode_table(out, t, put_uint);
                    }
                    FeasTable::Encrypted(t) => {
                        out.push(2);
                        encode_table(out, t, |o, e| e.write_bytes(o));
                    }
                    FeasTable::Shadow(t) => {
                        out.push(3);
                        encode_table(out, t, |o, e| o.push(u8::from(*e)));
                    }
                }
            }
            Msg::Decision { epoch, values } => {
                put_u32(out, *epoch);
                put_u32(out, values.len() as u32);
                for (l, s) in values {
                    encode_label(out, l);
                    encode_symbol(out, s);
                }
            }
            Msg::Share { y } => put_uint(out, y),
            Msg::Vect { owner, round, entries } => {
                out.extend_from_slice(&owner.to_be_bytes());
                out.push(*round);
                put_u32(out, entries.len() as u32);
                for e in entries {
                    e.write_bytes(out);
                }
            }
            Msg::Decr { epoch, ticket, c } => {
                put_u32(out, *epoch);
                out.extend_from_slice(&ticket.to_be_bytes());
                c.write_bytes(out);
            }
            Msg::Abort { epoch } | Msg::Init { epoch } => put_u32(out, *epoch),
        }
    }

    pub fn size(&self) -> usize {
        let mut out = Vec::new();
        self.encode(&mut out);
        out.len()
    }
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_be_bytes());
}

fn encode_label(out: &mut Vec<u8>, l: &Label) {
    match l {
        Label::Var(v) => {
            out.push(0);
            put_u32(out, v.0);
        }
        Label::Code(c) => {
            out.push(1);
            out.extend_from_slice(&c.to_be_bytes());
        }
    }
}

fn encode_symbol(out: &mut Vec<u8>, s: &Symbol) {
    match s {
        Symbol::Value(v) => {
            out.push(0);
            put_u32(out, *v);
        }
        Symbol::Code(c) => {
            out.push(1);
            out.extend_from_slice(&c.to_be_bytes());
        }
    }
}

fn encode_table<T>(out: &mut Vec<u8>, t: &Table<T>, mut entry: impl FnMut(&mut Vec<u8>, &T)) {
    put_u32(out, t.axes().len() as u32);
    for a in t.axes() {
        encode_label(out, &a.label);
        put_u32(out, a.symbols.len() as u32);
        for s in &a.symbols {
            encode_symbol(out, s);
        }
    }
    for e in t.entries() {
        entry(out, e);
    }
}
