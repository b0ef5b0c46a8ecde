use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use hybridlab::algebra::hybridize;
use hybridlab::benchmark;
use hybridlab::expr::{parse_polynomial, ParameterBinding};
use hybridlab::moments::{derive_generator, hamiltonian_generator, GeneratorMatrix};
use hybridlab::OperatorPolynomial;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ClassicalClassical,
    QuantumQuantum,
    Hybrid,
}

/// Which system to study. Without an explicit expression the coupled
/// oscillator benchmark with coupling `k` is used.
#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Mode::Hybrid)]
    pub mode: Mode,
    /// Coupling; also bound to the symbol `k` inside expressions.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub k: f64,
    /// Koopmanian in the expression syntax (hybrid mode only).
    #[arg(long, conflicts_with = "hamiltonian")]
    pub koopmanian: Option<String>,
    /// Total Hamiltonian in `q, p, x, y`.
    #[arg(long)]
    pub hamiltonian: Option<String>,
}

/// A resolved model: its linear moment dynamics and the quantity they conserve.
#[derive(Clone, Debug)]
pub struct Model {
    pub mode: Mode,
    /// The Koopmanian in hybrid mode, otherwise the Hamiltonian.
    pub generator: OperatorPolynomial,
    /// `K` or `H`.
    pub generator_name: &'static str,
    pub dynamics: GeneratorMatrix,
}

pub fn parameters(k: f64) -> Result<ParameterBinding> {
    if !k.is_finite() {
        bail!("coupling k must be finite, got {k}");
    }
    Ok(ParameterBinding::new().with("k", k)?)
}

pub fn parse(source: &str, k: f64) -> Result<OperatorPolynomial> {
    parse_polynomial(source, &parameters(k)?).map_err(|e| anyhow::anyhow!("`{source}`: {e}"))
}

impl ModelArgs {
    pub fn hamiltonian(&self) -> Result<OperatorPolynomial> {
        match &self.hamiltonian {
            Some(source) => parse(source, self.k),
            None => {
                parameters(self.k)?;
                Ok(benchmark::coupled_hamiltonian(self.k))
            }
        }
    }

    /// The hybrid Koopmanian, either given directly or hybridized from the Hamiltonian.
    pub fn koopmanian(&self) -> Result<OperatorPolynomial> {
        match &self.koopmanian {
            Some(source) => parse(source, self.k),
            None => Ok(hybridize(&self.hamiltonian()?)?),
        }
    }

    pub fn resolve(&self) -> Result<Model> {
        match self.mode {
            Mode::Hybrid => {
                let k_op = self.koopmanian()?;
                Ok(Model { mode: self.mode, dynamics: derive_generator(&k_op)?, generator: k_op, generator_name: "K" })
            }
            Mode::ClassicalClassical | Mode::QuantumQuantum => {
                if self.koopmanian.is_some() {
                    bail!("--koopmanian requires --mode hybrid");
                }
                let h = self.hamiltonian()?;
                Ok(Model { mode: self.mode, dynamics: hamiltonian_generator(&h)?, generator: h, generator_name: "H" })
            }
        }
    }
}
