use super::config::{InitialCondition, Model, RunConfig};
use super::HarnessError;
use crate::matrix::{
    energy_offset_mat, evolve_mat, modified_energy_mat, polar_ic, random_matrix_ic, standard_energy_mat,
    strang_step_mat, sup_frobenius, MatrixField, PolarVariant, ThresholdPolicy,
};
use crate::spectral::{ScalarField, TorusGrid};
use crate::vector::{
    energy_offset, evolve_vec, modified_energy_vec, random_direction_ic, smooth_ic, standard_energy_vec,
    strang_step_vec, sup_magnitude, trig_ic, VectorField,
};

/// State of either model.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Vector(VectorField),
    Matrix(MatrixField),
}

impl Field {
    pub fn initial(cfg: &RunConfig, grid: &TorusGrid) -> Result<Field, HarnessError> {
        let m = cfg.m;
        let field = match InitialCondition::parse(cfg)? {
            InitialCondition::RandomDirection { magnitude } => {
                Field::Vector(random_direction_ic(grid, m, magnitude, cfg.seed)?)
            }
            InitialCondition::Trig { magnitude } => Field::Vector(trig_ic(grid, magnitude)?),
            InitialCondition::Multimode { magnitude } => Field::Vector(smooth_ic(grid, m, magnitude)?),
            InitialCondition::Zero => match cfg.model {
                Model::Vector => Field::Vector(VectorField::zeros(grid, m)),
                Model::Matrix => Field::Matrix(MatrixField::zeros(grid, m)),
            },
            InitialCondition::Unit => match cfg.model {
                Model::Vector => {
                    let mut e1 = vec![0.0; m];
                    e1[0] = 1.0;
                    Field::Vector(VectorField::constant(grid, &e1))
                }
                Model::Matrix => {
                    let eye: Vec<f64> = (0..m * m).map(|k| if k % (m + 1) == 0 { 1.0 } else { 0.0 }).collect();
                    Field::Matrix(MatrixField::constant(grid, m, &eye))
                }
            },
            InitialCondition::Star => Field::Matrix(polar_ic(grid, PolarVariant::Star)?),
            InitialCondition::Stripe => Field::Matrix(polar_ic(grid, PolarVariant::Stripe)?),
            InitialCondition::RandomMatrix { magnitude } => {
                Field::Matrix(random_matrix_ic(grid, m, magnitude, cfg.seed)?)
            }
        };
        Ok(field)
    }

    /// Reassembles a field from its scalar components (entries for matrices).
    pub fn from_components(model: Model, m: usize, components: Vec<ScalarField>) -> Result<Field, HarnessError> {
        Ok(match model {
            Model::Vector => Field::Vector(VectorField::new(components)?),
            Model::Matrix => Field::Matrix(MatrixField::new(m, components)?),
        })
    }

    pub fn model(&self) -> Model {
        match self {
            Field::Vector(_) => Model::Vector,
            Field::Matrix(_) => Model::Matrix,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        match self {
            Field::Vector(u) => u.grid(),
            Field::Matrix(u) => u.grid(),
        }
    }

    /// Vector length or matrix size.
    pub fn m(&self) -> usize {
        match self {
            Field::Vector(u) => u.m(),
            Field::Matrix(u) => u.m(),
        }
    }

    pub fn components(&self) -> &[ScalarField] {
        match self {
            Field::Vector(u) => u.components(),
            Field::Matrix(u) => u.entries(),
        }
    }

    pub fn step(&self, tau: f64, policy: ThresholdPolicy) -> Result<Field, HarnessError> {
        Ok(match self {
            Field::Vector(u) => Field::Vector(strang_step_vec(u, tau)?.next),
            Field::Matrix(u) => Field::Matrix(strang_step_mat(u, tau, policy)?.next),
        })
    }

    /// `steps` steps with merged half steps; same result as repeated [`Field::step`] up to roundoff.
    pub fn evolve(&self, tau: f64, steps: usize, policy: ThresholdPolicy) -> Result<Field, HarnessError> {
        Ok(match self {
            Field::Vector(u) => Field::Vector(evolve_vec(u, tau, steps)?),
            Field::Matrix(u) => Field::Matrix(evolve_mat(u, tau, steps, policy)?),
        })
    }

    pub fn standard_energy(&self) -> Result<f64, HarnessError> {
        Ok(match self {
            Field::Vector(u) => standard_energy_vec(u)?,
            Field::Matrix(u) => standard_energy_mat(u)?,
        })
    }

    /// Modified energy of this (pre-half-step) state, including [`Field::energy_offset`].
    pub fn modified_energy(&self, tau: f64) -> Result<f64, HarnessError> {
        Ok(match self {
            Field::Vector(u) => modified_energy_vec(u, tau)?,
            Field::Matrix(u) => modified_energy_mat(u, tau)?,
        })
    }

    pub fn energy_offset(&self) -> f64 {
        match self {
            Field::Vector(u) => energy_offset(u.grid()),
            Field::Matrix(u) => energy_offset_mat(u.grid(), u.m()),
        }
    }

    /// Largest pointwise magnitude (Euclidean or Frobenius).
    pub fn sup_norm(&self) -> f64 {
        match self {
            Field::Vector(u) => sup_magnitude(u),
            Field::Matrix(u) => sup_frobenius(u),
        }
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64, HarnessError> {
        match (self, other) {
            (Field::Vector(a), Field::Vector(b)) if a.grid() == b.grid() && a.m() == b.m() => Ok(a.l2_distance(b)),
            (Field::Matrix(a), Field::Matrix(b)) if a.grid() == b.grid() && a.m() == b.m() => Ok(a.l2_distance(b)),
            _ => Err(HarnessError::Validation("fields are not comparable".into())),
        }
    }

    /// First non-finite value as `(node, value)`.
    pub fn first_non_finite(&self) -> Option<(usize, f64)> {
        self.components().iter().find_map(|c| c.first_non_finite())
    }
}
