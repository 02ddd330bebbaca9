"""Variational lab for the mean field equation -Δu = ρ₁(h₁eᵘ/∫h₁eᵘ - 1) - ρ₂(h₂e⁻ᵘ/∫h₂e⁻ᵘ - 1) on the unit torus."""

__version__ = "0.1.0"
