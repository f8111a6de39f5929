//! Lie and Nijenhuis calculus, the torsion map δ, the projector `P` and its
//! section π, torsion tensors and the α-families of endomorphism forms.

pub mod algebra;
mod forms;
mod tensor;

pub use forms::{
    delta_map, e_alpha, lie_bracket, nijenhuis, nijenhuis_bracket, normalizer_residual, pi02,
    pi_section, projector_p, s_alpha, t_alpha, tau_forms, th_from_jet, torsion_th, torsion_tp,
    tp_from_jet, centralizer_residual, EndoValuedOneForm, TauForms, VectorTwoForm,
};
pub use tensor::Tensor3;
