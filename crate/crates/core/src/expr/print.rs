use std::fmt;

use num_complex::Complex64;

use super::{BinaryOp, Expr, UnaryOp};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) | Expr::Var => PREC_ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Expr::Unary(_, _) => PREC_ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => PREC_ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => PREC_MUL,
        Expr::Pow(_, _) => PREC_POW,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    let re_plain = c.re.is_sign_positive();
    match (c.re, c.im) {
        (re, im) if im == 0.0 && re_plain => write!(f, "{re}"),
        (re, im) if re == 0.0 && im == 1.0 => f.write_str("i"),
        (re, 0.0) => write!(f, "({re})"),
        (0.0, im) => write!(f, "({im}*i)"),
        (re, im) if im < 0.0 => write!(f, "({re} - {}*i)", -im),
        (re, im) => write!(f, "({re} + {im}*i)"),
    }
}

/// Prints with the minimum parentheses needed for `parse` to rebuild the
/// same tree. Constants the parser cannot produce as a single literal
/// (negative or non-real values other than `i`) are printed as
/// parenthesized arithmetic, which re-parses to an equal value but a
/// different tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var => f.write_str("z"),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_wrapped(f, a, precedence(a) < PREC_NEG)
            }
            Expr::Unary(op, a) => {
                let name = op.function_name().expect("named function");
                write!(f, "{name}({a})")
            }
            Expr::Binary(op, a, b) => {
                let p = precedence(self);
                write_wrapped(f, a, precedence(a) < p)?;
                f.write_str(match op {
                    BinaryOp::Add => " + ",
                    BinaryOp::Sub => " - ",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                })?;
                write_wrapped(f, b, precedence(b) <= p)
            }
            Expr::Pow(a, k) => {
                write_wrapped(f, a, precedence(a) < PREC_ATOM)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
        }
    }
}
