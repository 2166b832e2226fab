//! Straight-line evaluation of many expressions at once.
//!
//! Compilation flattens a set of expression trees into a single instruction
//! list with common subexpressions merged, both by pointer (shared `Arc`
//! nodes from differentiation) and by structure.

use std::collections::HashMap;

use super::{BinaryOp, EvalError, Expr, Node, UnaryOp};

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
}

#[derive(Debug, Clone)]
pub struct Tape {
    instrs: Vec<Instr>,
    /// Source node of each instruction, for error reporting.
    nodes: Vec<Expr>,
    outputs: Vec<u32>,
}

struct Builder {
    instrs: Vec<Instr>,
    nodes: Vec<Expr>,
    by_ptr: HashMap<*const Node, u32>,
    by_key: HashMap<Key, u32>,
}

impl Builder {
    fn push(&mut self, key: Key, instr: Instr, e: &Expr) -> u32 {
        if let Some(&slot) = self.by_key.get(&key) {
            return slot;
        }
        let slot = self.instrs.len() as u32;
        self.instrs.push(instr);
        self.nodes.push(e.clone());
        self.by_key.insert(key, slot);
        slot
    }

    fn visit(&mut self, e: &Expr) -> u32 {
        if let Some(&slot) = self.by_ptr.get(&e.ptr()) {
            return slot;
        }
        let slot = match e.node() {
            Node::Const(c) => self.push(Key::Const(c.to_bits()), Instr::Const(*c), e),
            Node::Var(i) => self.push(Key::Var(*i), Instr::Var(*i), e),
            Node::Unary(op, a) => {
                let a = self.visit(a);
                self.push(Key::Unary(*op, a), Instr::Unary(*op, a), e)
            }
            Node::Binary(op, a, b) => {
                let a = self.visit(a);
                let b = self.visit(b);
                self.push(Key::Binary(*op, a, b), Instr::Binary(*op, a, b), e)
            }
        };
        self.by_ptr.insert(e.ptr(), slot);
        slot
    }
}

impl Tape {
    pub fn compile(outputs: &[Expr]) -> Self {
        let mut b = Builder {
            instrs: Vec::new(),
            nodes: Vec::new(),
            by_ptr: HashMap::new(),
            by_key: HashMap::new(),
        };
        let outputs = outputs.iter().map(|e| b.visit(e)).collect();
        Tape {
            instrs: b.instrs,
            nodes: b.nodes,
            outputs,
        }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate every output at `x`, writing them to `out`. `scratch` is
    /// resized as needed and may be reused between calls.
    pub fn eval(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        scratch.clear();
        scratch.reserve(self.instrs.len());
        for (slot, instr) in self.instrs.iter().enumerate() {
            let v = match *instr {
                Instr::Const(c) => Ok(c),
                Instr::Var(i) => Ok(x[i]),
                Instr::Unary(op, a) => op.apply(scratch[a as usize]),
                Instr::Binary(op, a, b) => op.apply(scratch[a as usize], scratch[b as usize]),
            };
            match v {
                Ok(v) => scratch.push(v),
                Err(kind) => {
                    return Err(EvalError {
                        kind,
                        node: self.nodes[slot].clone(),
                    })
                }
            }
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[slot as usize];
        }
        Ok(())
    }

    pub fn eval_vec(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs.len()];
        self.eval(x, &mut scratch, &mut out)?;
        Ok(out)
    }
}
