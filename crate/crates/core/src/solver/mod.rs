//! Double-loop penalty-dual solver for the bound maximisation.
//!
//! Internally every block problem is a minimisation: the phase block minimises
//! `h(φ) = −u(φ)/v(φ) + (1/2ϱ) Σ (|φᵢ| − 1 − ϱλᵢ)²` and the beam block
//! minimises `g(w) = −(wᴴAw + 1)/(wᴴBw + 1)` over `‖w‖² ≤ P_max`.
//!
//! Gradients follow the real-linear convention `grad = 2 ∂f/∂x*`, so that
//! `f(x + tδ) = f(x) + t Re⟨grad, δ⟩ + O(t²)` with `⟨a, b⟩ = aᴴb`.

mod bsca;
mod gradient;
mod line_search;
mod pdca;

pub use bsca::{bsca_inner, InnerResult, InnerStep, StepRecord};
pub use gradient::{grad_beam, grad_phase, PhaseModel};
pub use line_search::{armijo_step, project_power, ArmijoOutcome, ArmijoParams};
pub use pdca::{initial_point, pdca_solve, OuterRecord, PdcaConfig, SolveOutput, SolveTrace};
