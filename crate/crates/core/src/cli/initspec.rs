//! Initial-state mini-language.
//!
//! * `bell:a,b,c,d[:x,y]`: coin a|ψ+⟩ + b|ψ−⟩ + c|φ+⟩ + d|φ−⟩ on sites (x, y), default (0, 0).
//!   Amplitudes are complex literals such as `0.5`, `-1j`, `0.3+0.4j`; they are normalized.
//! * `basis:x,i,y,j`: |x,i⟩|y,j⟩ with i, j ∈ {L, R}; `basis:x,i` for one particle.
//! * `LL`: shorthand for |0,L⟩|0,L⟩.
//! * `mixed`: the maximally mixed state.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::asymptotics::{initial_state, BellCoinState};
use crate::error::{Error, Result};
use crate::hilbert::{two_particle_index, BasisIndex, Coin, Topology};
use crate::linalg::{c64, identity, outer, DensityMatrix, StateVector, ONE};

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Bell { coin: BellCoinState, x: usize, y: usize },
    Basis(Vec<BasisIndex>),
    Mixed,
}

/// Parses `re`, `imj`, `re+imj`, `re-imj` (also `i` for the imaginary unit).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("bad complex literal {s:?}"));
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return t.parse::<f64>().map(|re| c64(re, 0.0)).map_err(|_| err());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| err())?;
            Ok(c64(re, imag(&body[k..])?))
        }
        None => Ok(c64(0.0, imag(body)?)),
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("expected a site index, got {s:?}")))
}

impl FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "LL" => return Ok(InitSpec::Basis(vec![BasisIndex::new(0, Coin::L); 2])),
            "mixed" => return Ok(InitSpec::Mixed),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("bell:") {
            let mut parts = rest.split(':');
            let amps = parts
                .next()
                .unwrap_or("")
                .split(',')
                .map(parse_complex)
                .collect::<Result<Vec<_>>>()?;
            if amps.len() != 4 {
                return Err(Error::Parse(format!("bell: needs 4 amplitudes, got {}", amps.len())));
            }
            let (x, y) = match parts.next() {
                None => (0, 0),
                Some(sites) => {
                    let v: Vec<&str> = sites.split(',').collect();
                    if v.len() != 2 {
                        return Err(Error::Parse(format!("bell sites must be x,y, got {sites:?}")));
                    }
                    (parse_usize(v[0])?, parse_usize(v[1])?)
                }
            };
            if parts.next().is_some() {
                return Err(Error::Parse(format!("trailing fields in {s:?}")));
            }
            let coin = BellCoinState::normalized(amps[0], amps[1], amps[2], amps[3])?;
            return Ok(InitSpec::Bell { coin, x, y });
        }
        if let Some(rest) = s.strip_prefix("basis:") {
            let v: Vec<&str> = rest.split(',').collect();
            if v.len() != 2 && v.len() != 4 {
                return Err(Error::Parse(format!("basis: needs x,i or x,i,y,j, got {rest:?}")));
            }
            let idx = v
                .chunks(2)
                .map(|p| Ok(BasisIndex::new(parse_usize(p[0])?, p[1].trim().parse::<Coin>()?)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(InitSpec::Basis(idx));
        }
        Err(Error::Parse(format!("unknown initial state {s:?} (use bell:..., basis:..., LL or mixed)")))
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = |c: Complex64| format!("{}{:+}j", c.re, c.im);
        match self {
            InitSpec::Bell { coin, x, y } => {
                write!(f, "bell:{},{},{},{}:{x},{y}", z(coin.a), z(coin.b), z(coin.c), z(coin.d))
            }
            InitSpec::Basis(v) => {
                let parts: Vec<String> = v.iter().map(|b| format!("{},{:?}", b.site, b.coin)).collect();
                write!(f, "basis:{}", parts.join(","))
            }
            InitSpec::Mixed => write!(f, "mixed"),
        }
    }
}

impl serde::Serialize for InitSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl InitSpec {
    pub fn particles(&self) -> Option<usize> {
        match self {
            InitSpec::Bell { .. } => Some(2),
            InitSpec::Basis(v) => Some(v.len()),
            InitSpec::Mixed => None,
        }
    }

    fn check_particles(&self, particles: usize) -> Result<()> {
        match self.particles() {
            Some(p) if p != particles => Err(Error::InvalidParameter(format!(
                "initial state {self} describes {p} particle(s), run uses {particles}"
            ))),
            _ => Ok(()),
        }
    }

    /// Pure state vector; `mixed` has none.
    pub fn state_vector(&self, topology: &Topology, particles: usize) -> Result<Option<StateVector>> {
        self.check_particles(particles)?;
        let n = topology.n_sites();
        match self {
            InitSpec::Bell { coin, x, y } => initial_state(topology, *x, *y, coin).map(Some),
            InitSpec::Basis(v) => {
                if let Some(b) = v.iter().find(|b| b.site >= n) {
                    return Err(Error::InvalidParameter(format!("site {} outside 0..{n}", b.site)));
                }
                let mut psi = StateVector::zeros(topology.dim_for(particles));
                let k = if particles == 1 { v[0].flat() } else { two_particle_index(topology, v[0], v[1]) };
                psi[k] = ONE;
                Ok(Some(psi))
            }
            InitSpec::Mixed => Ok(None),
        }
    }

    pub fn density(&self, topology: &Topology, particles: usize) -> Result<DensityMatrix> {
        match self.state_vector(topology, particles)? {
            Some(v) => Ok(outer(&v, &v)),
            None => {
                let d = topology.dim_for(particles);
                Ok(identity(d).unscale(d as f64))
            }
        }
    }

    /// The Bell coin for two-particle specs (basis states are decomposed too).
    pub fn coin(&self) -> Option<BellCoinState> {
        match self {
            InitSpec::Bell { coin, .. } => Some(*coin),
            InitSpec::Basis(v) if v.len() == 2 => {
                let mut amps = [c64(0.0, 0.0); 4];
                amps[2 * v[0].coin.index() + v[1].coin.index()] = ONE;
                BellCoinState::from_coin_amplitudes(amps).ok()
            }
            _ => None,
        }
    }
}
