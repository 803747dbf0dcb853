"""Frozen oracle values (regenerate with ``python tests/oracles/golden_oracles.py``).

Reference configuration: gamma_n = 4^n (n = 1..6, real), v_n = 1,
g(z) = log(z + i), cells cut at radii 10, 40, 160, 640, 2560.
"""

GAMMAS = tuple(4.0**n for n in range(1, 7))
SYMBOL = "log(z+i)"

# P_6 diverges (|g'|^2 y ~ 1/r on the unbounded cell)
P = (13.054430419385767, 55.881035493957484, 235.70642285406015, 955.660395539592,
     3835.6487304779594)
Q = (1.9922558307094365, 0.13629494711899248, 0.0365964016319319, 0.009317741561334187,
     0.002340158900196175, 0.0007810103817109951)
L = (0.6572879428379395, 0.16478193408568242, 0.04316341276510735, 0.01091755043619581,
     0.0027373666795474875, 0.0008838291597545625)
B = (0.23972366780129392, 0.11602229527368245, 0.04227388606661012, 0.013761714917046123,
     0.004208794258584024, 0.0)
# int over the whole half-plane of v_k |g'|^2 y / |z - gamma_k|^2
FULL_D = (0.8463471238323592, 0.2695737018244894, 0.07366309248410567, 0.018995752934438198,
          0.004797451770725551, 0.0012031706315626047)
S_LOCAL = 0.8797720359642272
S_GLOBAL = 0.32468460572445823
HS_DIRECT = 4.858321173910723  # c_lp = 4

# three-node space gamma = (4, 16, 64), same symbol
SMALL_GAMMAS = (4.0, 16.0, 64.0)
SMALL_L1 = 0.6572879428379395
SMALL_B = (0.23951124522149927, 0.11490057268309636, 0.0)

# I = exp(i z), g = 1/(z + i), w = i
MODEL_Q_AT_I = 0.02796368315741019
# I = exp(i a z), g = 1/(z + i)
MODEL_HS = {1.0: 0.4356489984470956, 0.5: 0.31702804028189896}

# sum_{n=1}^{20} 1 / (1 + 4^n)
ADMISSIBILITY_2N = 0.279400262405657
