//! Runtime values. Constructors and pairs mirror the pattern language;
//! messages and integers are opaque to pattern matching and can only be
//! bound whole by a variable.

use crate::ans::Message;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Ctor(String, Vec<Value>),
    Pair(Box<Value>, Box<Value>),
    Msg(Message),
    Int(i64),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn ctor(name: &str, args: Vec<Value>) -> Value {
        Value::Ctor(name.to_string(), args)
    }

    pub fn nullary(name: &str) -> Value {
        Value::Ctor(name.to_string(), Vec::new())
    }

    pub fn into_pair(self) -> Result<(Value, Value), Value> {
        match self {
            Value::Pair(a, b) => Ok((*a, *b)),
            other => Err(other),
        }
    }

    pub fn into_msg(self) -> Result<Message, Value> {
        match self {
            Value::Msg(m) => Ok(m),
            other => Err(other),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Ctor(name, args) => {
                write!(f, "({}", name)?;
                for a in args {
                    write!(f, " {}", a)?;
                }
                write!(f, ")")
            }
            Value::Pair(a, b) => write!(f, "({} , {})", a, b),
            Value::Msg(m) => {
                // Display-only form; messages have no literal syntax.
                write!(f, "<msg {} bits>", m.bits())
            }
            Value::Int(n) => write!(f, "{}", n),
        }
    }
}
