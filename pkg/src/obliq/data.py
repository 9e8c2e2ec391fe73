"""Published step-function coordinates and reference values, for regression checks."""

# (G_i, H_i) per segment, i = 1..n
FIGURE_GH = {
    4: [(0.7887, 0.6148), (0.6719, 0.7442), (0.5004, 0.8779), (0.2708, 1.0568)],
    5: [(0.7614, 0.6483), (0.6842, 0.7308), (0.5675, 0.8302), (0.4069, 0.9669),
        (0.2113, 1.1250)],
    6: [(0.7998, 0.6002), (0.7296, 0.6853), (0.6373, 0.7720), (0.5085, 0.8687),
        (0.3644, 0.9768), (0.2021, 1.0986)],
    7: [(0.8187, 0.5743), (0.7531, 0.6635), (0.6773, 0.7311), (0.5923, 0.8061),
        (0.4819, 0.8835), (0.3403, 0.9828), (0.1980, 1.0826)],
    8: [(0.8096, 0.5869), (0.7573, 0.6542), (0.6912, 0.7234), (0.6145, 0.7896),
        (0.5224, 0.8564), (0.4198, 0.9308), (0.3007, 1.0171), (0.1646, 1.1158)],
    9: [(0.8265, 0.5629), (0.7769, 0.6318), (0.7230, 0.6916), (0.6648, 0.7465),
        (0.5842, 0.8120), (0.5025, 0.8677), (0.4016, 0.9364), (0.2748, 1.0228),
        (0.1563, 1.1034)],
}

FIGURE_RATIO = {4: 0.6321, 5: 0.6389, 6: 0.6447, 7: 0.6487, 8: 0.6515, 9: 0.6537}

# general-form angle reported alongside some figure rows
FIGURE_PHI = {4: 0.6621, 9: 0.5979}

TABLE_13 = [
    (0.8200, 0.5724), (0.7883, 0.6152), (0.7530, 0.6580), (0.7139, 0.7002),
    (0.6708, 0.7416), (0.6237, 0.7817), (0.5724, 0.8200), (0.5152, 0.8599),
    (0.4498, 0.9055), (0.3763, 0.9569), (0.2945, 1.0140), (0.2045, 1.0767),
    (0.1064, 1.1453),
]

VERIFIED_RATIO = {7: 0.6479, 8: 0.6506, 9: 0.6529, 10: 0.6549, 11: 0.6565,
                  12: 0.6575, 13: 0.6590}


def figure_gh(n: int, raw: bool = False):
    """Published coordinates as a GhPair, shrunk just enough to be budget-feasible.

    The four-decimal rounding pushes some products H_i G_j + H_j G_i
    slightly above 1; ``raw=True`` returns them untouched.
    """
    from .stepfn import GhPair, shrink_to_budget
    rows = TABLE_13 if n == 13 else FIGURE_GH[n]
    gh = GhPair.from_values([g for g, _ in rows], [h for _, h in rows])
    return gh if raw else shrink_to_budget(gh)
