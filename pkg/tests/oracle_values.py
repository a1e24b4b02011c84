"""Reference values frozen from scripts/compute_oracles.py (independent integrals and series)."""

import math

# P[R1 + R2 > x] / (2 x^-2) for iid Pareto(2, 1) radii
PARETO2_CONV_RATIO = {
    math.sqrt(1000.0): 1.144956259935476,
    100.0: 1.0425550517080606,
    316.0: 1.0129837875202952,
    1000.0: 1.00403943852667,
}

FGM_SPEARMAN_09 = 0.3
BREIMAN_U01_FGM06_A2 = 0.4333333333333333
# exact P[Theta R > 50] / (E[Theta^2 h] 50^-2), FGM 0.6, Theta ~ U(0,1), R ~ Pareto(2,1)
MIXTURE_RATIO_X50 = 0.9999261538461411
CAMPBELL_CR_1_1_1 = 0.6321205588285578
C0_FGM05_LAM2_T3 = 5.750001536053088
CR_CANONICAL = 1.4239173470725008
POISSON_SF_3_MEAN2 = 0.14287653950145296
LOGPARETO_JMINUS_PROXY = 0.0476429458906282
