"""Published GERR/EFR/ECR triples and cost multiples used as fixtures."""

OPERATIONS = ("retrieval+generation", "+detection", "+query_opt", "+rerank", "+compression", "+all")

# (GERR, EFR, ECR) per operation row
GENERATION_RATIOS = {
    "internal": {
        "retrieval+generation": (0.144, 0.096, 0.328),
        "+detection": (0.188, 0.137, 0.413),
        "+query_opt": (5.005, 3.312, 11.918),
        "+rerank": (0.584, 0.413, 1.307),
        "+compression": (2.542, 1.686, 5.261),
        "+all": (6.561, 4.604, 14.325),
    },
    "external_a": {
        "retrieval+generation": (0.951, 0.102, 1.440),
        "+detection": (1.114, 0.120, 1.686),
        "+query_opt": (15.957, 1.823, 19.490),
        "+rerank": (3.172, 0.356, 4.490),
        "+compression": (12.884, 2.039, 23.653),
        "+all": (28.568, 3.596, 43.460),
    },
    "external_b": {
        "retrieval+generation": (0.230, 0.176, 0.669),
        "+detection": (0.385, 0.294, 1.120),
        "+query_opt": (2.806, 2.012, 8.135),
        "+rerank": (0.499, 0.361, 1.368),
        "+compression": (1.193, 0.942, 3.403),
        "+all": (3.433, 2.809, 9.637),
    },
}

COST_MULTIPLES = {
    "internal": {"+detection": 1.30, "+query_opt": 35.19, "+rerank": 4.11, "+compression": 17.07, "+all": 45.70},
    "external_a": {"+detection": 1.17, "+query_opt": 15.95, "+rerank": 3.31, "+compression": 16.45, "+all": 31.74},
    "external_b": {"+detection": 1.67, "+query_opt": 11.93, "+rerank": 2.09, "+compression": 5.21, "+all": 15.08},
}

# Recomputed from the rounded GENERATION_RATIOS inputs; the printed 1.30 is not reachable from them.
INTERNAL_DETECTION_RECOMPUTED = 1.33
