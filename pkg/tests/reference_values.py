"""Welch t-test reference values: scipy.stats.ttest_ind(a, b, equal_var=False), run once and frozen.

Columns: sample a, sample b, t, Welch-Satterthwaite df, two-sided p.
"""

WELCH_REFERENCE = [
    ([1, 2, 3, 4, 5], [2, 4, 6, 8, 10], -1.8973665961010275, 5.882352941176471, 0.10753119493062718),
    ([1.882, 0.5, 3.1, 2.2, 0.9, 1.4], [0.846, 0.7, 1.1, 0.2, 0.95], 2.1894416429829593, 6.538351014209114, 0.06743597497647767),
    ([10, 12, 9, 11, 13, 10, 12], [20, 18, 25, 22], -6.4634612523745165, 3.78720105231706, 0.003556186358214969),
    ([0.1, 0.2, 0.15, 0.3], [0.12, 0.22, 0.18, 0.28, 0.31, 0.09], -0.22512779629689367, 6.668824117179606, 0.8286219922670244),
    ([5, 5, 5, 6], [1, 9, 3, 7, 2], 0.54611868127275, 4.210732207534789, 0.6126375029865752),
    ([100, 250, 75, 300, 410, 120, 90, 60], [30, 45, 20, 80], 2.7887472797361883, 8.0866544421885, 0.023358101777731576),
    ([-1.5, -2.0, 0.5, 1.0], [2.5, 3.0, 4.5, 1.0, 2.0], -3.3108876734664054, 6.1064809280066505, 0.01577304875457658),
    ([3, 4], [8, 9, 10], -7.201190377787749, 2.8823529411764697, 0.00629998896376119),
    ([1, 2, 3, 4, 5, 6, 7, 8, 9, 10], [1.1, 2.1, 2.9, 4.2, 5.0, 5.8, 7.1, 8.2, 9.1, 9.9], -0.029599058370268348, 17.99973049499789, 0.9767125380898667),
    ([0.822, 0.6, 1.1, 0.7, 0.9, 0.55], [0.646, 0.7, 0.6, 0.66, 0.58, 0.63, 0.71], 1.5418184159920563, 5.474346362158426, 0.17873440608862992),
]
