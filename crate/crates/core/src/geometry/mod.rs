//! Tensor calculus on grid fields.
//!
//! Conventions: `Γ^k_ij = ½g^kl(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`,
//! `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l` with
//! `R^l_ijk = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^p_jkΓ^l_ip − Γ^p_ikΓ^l_jp`,
//! `R_ijkl = g_ls R^s_ijk`, `R_jk = R^i_ijk`, `R = g^jk R_jk`.
//! With these, the round sphere has `R_ijkl = K(g_jk g_il − g_ik g_jl)` and
//! `[∇_i, ∇_j]ω_k = −R^p_ijk ω_p`.

mod algebra;
mod calculus;
mod connection;
mod identities;

pub use algebra::{
    b_tensor, covector_norm_sq, flip_slot, inner, sym_inner, symmetrize, tensor_norm_sq, trace, with_variance,
};
pub use calculus::{covariant_derivative, gradient, hessian, laplacian, laplacian_tensor};
pub use connection::{
    christoffel, invert_metric, ricci_and_scalar, riemann, riemann_symmetry_residual, Connection, CurvatureBundle,
};
pub use identities::{bianchi_residual, ricci_identity_residual};
