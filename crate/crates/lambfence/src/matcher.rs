//! Pattern matchers that report every match length at a position.
//!
//! The exploratory scanning policy needs the full set of match lengths
//! starting at a position, which longest-match-only regex engines cannot
//! report, so patterns compile to a small Thompson NFA that is simulated
//! breadth-first. The supported subset is concatenation, alternation,
//! character classes, `.`, `?`, `*`, `+`, grouping, and escapes; there are no
//! backreferences or lookaround, which keeps the per-position simulation
//! linear.

use thiserror::Error;

/// Pattern compilation failure, with the offending position in the pattern.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad pattern at offset {position}: {message}")]
pub struct PatternError {
    pub position: usize,
    pub message: String,
}

/// The custom-matcher interface: given an input and a start position, report
/// the set of match lengths (use `longest_match` for the greedy policy).
/// Implementations must be reentrant and side-effect-free.
pub trait TokenMatcher {
    /// All distinct match lengths starting at `start`, in ascending order.
    /// A length of zero means the pattern matches the empty string; the
    /// scanner ignores zero-length matches.
    fn match_lengths(&self, input: &[char], start: usize) -> Vec<usize>;

    fn longest_match(&self, input: &[char], start: usize) -> Option<usize> {
        self.match_lengths(input, start).into_iter().max()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum CharClass {
    Any,
    Set { negated: bool, ranges: Vec<(char, char)> },
}

impl CharClass {
    fn matches(&self, c: char) -> bool {
        match self {
            CharClass::Any => true,
            CharClass::Set { negated, ranges } => {
                let hit = ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi);
                hit != *negated
            }
        }
    }

    fn single(c: char) -> Self {
        CharClass::Set {
            negated: false,
            ranges: vec![(c, c)],
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Char(CharClass, usize),
    Split(usize, usize),
    Accept,
}

/// A compiled regular expression in the supported subset.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    source: String,
    states: Vec<State>,
    start: usize,
}

impl CompiledPattern {
    pub fn compile(pattern: &str) -> Result<CompiledPattern, PatternError> {
        let chars: Vec<char> = pattern.chars().collect();
        let mut p = Parser {
            chars: &chars,
            pos: 0,
            states: Vec::new(),
        };
        let frag = p.parse_alternation()?;
        if p.pos != p.chars.len() {
            return Err(PatternError {
                position: p.pos,
                message: "unexpected character".into(),
            });
        }
        let accept = p.push(State::Accept);
        p.patch(&frag.outs, accept);
        Ok(CompiledPattern {
            source: pattern.to_string(),
            states: p.states,
            start: frag.start,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Does the pattern match the whole string?
    pub fn full_match(&self, text: &[char]) -> bool {
        self.match_lengths(text, 0).contains(&text.len())
    }

    fn add_state(&self, idx: usize, set: &mut Vec<bool>, list: &mut Vec<usize>) {
        if set[idx] {
            return;
        }
        set[idx] = true;
        match self.states[idx] {
            State::Split(a, b) => {
                self.add_state(a, set, list);
                self.add_state(b, set, list);
            }
            _ => list.push(idx),
        }
    }
}

impl TokenMatcher for CompiledPattern {
    fn match_lengths(&self, input: &[char], start: usize) -> Vec<usize> {
        let mut lengths = Vec::new();
        let mut set = vec![false; self.states.len()];
        let mut current: Vec<usize> = Vec::new();
        self.add_state(self.start, &mut set, &mut current);
        let accepting =
            |set: &Vec<bool>| matches!(self.states.iter().position(|s| matches!(s, State::Accept)), Some(i) if set[i]);
        if accepting(&set) {
            lengths.push(0);
        }
        let mut offset = 0;
        while !current.is_empty() && start + offset < input.len() {
            let c = input[start + offset];
            let mut next_set = vec![false; self.states.len()];
            let mut next: Vec<usize> = Vec::new();
            for &idx in &current {
                if let State::Char(ref class, out) = self.states[idx] {
                    if class.matches(c) {
                        self.add_state(out, &mut next_set, &mut next);
                    }
                }
            }
            offset += 1;
            if accepting(&next_set) {
                lengths.push(offset);
            }
            set = next_set;
            current = next;
        }
        let _ = set;
        lengths
    }
}

struct Frag {
    start: usize,
    outs: Vec<(usize, u8)>, // (state index, which out slot: 0 = first/only, 1 = second)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
    states: Vec<State>,
}

impl<'a> Parser<'a> {
    fn push(&mut self, s: State) -> usize {
        self.states.push(s);
        self.states.len() - 1
    }

    fn patch(&mut self, outs: &[(usize, u8)], target: usize) {
        for &(idx, slot) in outs {
            match &mut self.states[idx] {
                State::Char(_, out) => *out = target,
                State::Split(a, b) => {
                    if slot == 0 {
                        *a = target;
                    } else {
                        *b = target;
                    }
                }
                State::Accept => {}
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn err(&self, message: &str) -> PatternError {
        PatternError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn parse_alternation(&mut self) -> Result<Frag, PatternError> {
        let mut branches = vec![self.parse_concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.parse_concat()?);
        }
        if branches.len() == 1 {
            return Ok(branches.pop().unwrap());
        }
        let mut outs = Vec::new();
        let mut start = None;
        for b in branches.into_iter().rev() {
            outs.extend(b.outs);
            start = Some(match start {
                None => b.start,
                Some(prev) => self.push(State::Split(b.start, prev)),
            });
        }
        Ok(Frag {
            start: start.unwrap(),
            outs,
        })
    }

    fn parse_concat(&mut self) -> Result<Frag, PatternError> {
        let mut frags: Vec<Frag> = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            frags.push(self.parse_repeat()?);
        }
        if frags.is_empty() {
            // Empty branch: a split with both slots joined, matching epsilon.
            let idx = self.push(State::Split(usize::MAX, usize::MAX));
            return Ok(Frag {
                start: idx,
                outs: vec![(idx, 0), (idx, 1)],
            });
        }
        let mut iter = frags.into_iter();
        let mut acc = iter.next().unwrap();
        for next in iter {
            self.patch(&acc.outs, next.start);
            acc = Frag {
                start: acc.start,
                outs: next.outs,
            };
        }
        Ok(acc)
    }

    fn parse_repeat(&mut self) -> Result<Frag, PatternError> {
        let atom = self.parse_atom()?;
        match self.peek() {
            Some('?') => {
                self.pos += 1;
                let idx = self.push(State::Split(atom.start, usize::MAX));
                let mut outs = atom.outs;
                outs.push((idx, 1));
                Ok(Frag { start: idx, outs })
            }
            Some('*') => {
                self.pos += 1;
                let idx = self.push(State::Split(atom.start, usize::MAX));
                self.patch(&atom.outs, idx);
                Ok(Frag {
                    start: idx,
                    outs: vec![(idx, 1)],
                })
            }
            Some('+') => {
                self.pos += 1;
                let idx = self.push(State::Split(atom.start, usize::MAX));
                self.patch(&atom.outs, idx);
                Ok(Frag {
                    start: atom.start,
                    outs: vec![(idx, 1)],
                })
            }
            _ => Ok(atom),
        }
    }

    fn parse_atom(&mut self) -> Result<Frag, PatternError> {
        match self.peek() {
            None => Err(self.err("unexpected end of pattern")),
            Some('(') => {
                self.pos += 1;
                let inner = self.parse_alternation()?;
                if self.peek() != Some(')') {
                    return Err(self.err("unclosed group"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('[') => self.parse_class(),
            Some('.') => {
                self.pos += 1;
                Ok(self.char_frag(CharClass::Any))
            }
            Some('\\') => {
                self.pos += 1;
                let c = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                self.pos += 1;
                let class = match c {
                    't' => CharClass::single('\t'),
                    'n' => CharClass::single('\n'),
                    'r' => CharClass::single('\r'),
                    'd' => CharClass::Set {
                        negated: false,
                        ranges: vec![('0', '9')],
                    },
                    c if c.is_ascii_alphanumeric() => {
                        self.pos -= 1;
                        return Err(self.err("unsupported escape"));
                    }
                    c => CharClass::single(c),
                };
                Ok(self.char_frag(class))
            }
            Some('?' | '*' | '+') => Err(self.err("repetition without operand")),
            Some(c) => {
                self.pos += 1;
                Ok(self.char_frag(CharClass::single(c)))
            }
        }
    }

    fn parse_class(&mut self) -> Result<Frag, PatternError> {
        debug_assert_eq!(self.peek(), Some('['));
        self.pos += 1;
        let negated = if self.peek() == Some('^') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut ranges = Vec::new();
        loop {
            let c = match self.peek() {
                None => return Err(self.err("unclosed character class")),
                Some(']') if !ranges.is_empty() || negated => break,
                Some(']') if ranges.is_empty() => break, // empty class is an error below
                Some(c) => c,
            };
            self.pos += 1;
            let lo = if c == '\\' {
                let e = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                self.pos += 1;
                match e {
                    't' => '\t',
                    'n' => '\n',
                    'r' => '\r',
                    e => e,
                }
            } else {
                c
            };
            if self.peek() == Some('-') && self.chars.get(self.pos + 1).copied() != Some(']') {
                self.pos += 1;
                let hi = self.peek().ok_or_else(|| self.err("unclosed range"))?;
                self.pos += 1;
                if hi < lo {
                    return Err(self.err("inverted range"));
                }
                ranges.push((lo, hi));
            } else {
                ranges.push((lo, lo));
            }
        }
        if ranges.is_empty() {
            return Err(self.err("empty character class"));
        }
        self.pos += 1; // consume ']'
        Ok(self.char_frag(CharClass::Set { negated, ranges }))
    }

    fn char_frag(&mut self, class: CharClass) -> Frag {
        let idx = self.push(State::Char(class, usize::MAX));
        Frag {
            start: idx,
            outs: vec![(idx, 0)],
        }
    }
}
