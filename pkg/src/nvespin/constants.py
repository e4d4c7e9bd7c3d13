"""Physical constants, in the units used throughout the package.

Energies are frequencies (MHz), fields are mT unless a name says otherwise.
"""

# Bohr and nuclear magnetons over Planck's constant
MU_B_MHZ_PER_T = 13996.2
MU_N_MHZ_PER_T = 7.622593
MU_B_MHZ_PER_MT = MU_B_MHZ_PER_T * 1e-3
MU_N_MHZ_PER_MT = MU_N_MHZ_PER_T * 1e-3

G_N = {
    "14N": 0.403761,
    "13C": 1.404824,
}

BOLTZMANN_MEV_PER_K = 0.0861733

# NV- ground state
D_NV_MHZ = 2873.0
G_NV = 2.0030

# 14N hyperfine and quadrupole couplings (MHz)
N14_A_PAR = -2.19
N14_A_PERP = -2.65
N14_P_PAR = -4.95

# SI values for the dipolar estimates
MU0_OVER_4PI = 1e-7  # T m / A
MU_B_SI = 9.2740100783e-24  # J/T
H_PLANCK = 6.62607015e-34  # J s

DIAMOND_ATOMS_PER_CM3 = 1.762e23
