# src/labels.py

TEXTS = {
    # ranking / comparison / sweep columns
    "node": "Node label",
    "measure": "Centrality measure",
    "score": "Centrality score",
    "rank": "Rank by descending score, ties broken by node label",
    "t": "Attenuation parameter",
    "fraction": "t as a fraction of the measure's permitted upper end",
    "normalized": "Score divided by the largest score at the same t",
    "kendall_tau": "Kendall rank correlation between the two compared measures",
    # radius report quantities
    "quantity": "Reported quantity",
    "value": "Value",
    "rho_A": "Spectral radius of the adjacency matrix",
    "rho_V": "Spectral radius of the square-rooted non-backtracking line graph",
    "rho_W_sqrt": "Spectral radius of the square-rooted line graph",
    "rho_M": "Spectral radius of the global temporal transition matrix",
    "max_rho_C": "Largest snapshot radius of the transition blocks before square roots",
    "max_rho_A_snapshot": "Largest adjacency spectral radius over snapshots",
    "katz_upper": "Upper end of the permitted t range for classical Katz",
    "nbt_upper": "Upper end of the permitted t range for non-backtracking measures",
    "temporal_katz_upper": "Upper end of the permitted t range for classical temporal Katz",
    "temporal_nbt_upper": "Upper end of the permitted t range for the chosen temporal regime",
    "graph": "Graph variant (original or binarized)",
    # walk counts
    "src": "Source node or edge",
    "dst": "Target node or edge",
    "k": "Walk length",
    "count": "Weighted walk count",
    # oracle battery
    "identity": "Checked identity",
    "deviation": "Largest relative deviation",
    "tol": "Tolerance",
    "passed": "Whether the deviation is within tolerance",
    # ledger
    "id": "Run id",
    "command": "Subcommand",
    "input_digest": "SHA-256 of the input files",
    "status": "Run outcome",
    "created_at": "Recorded at",
}


def label(key: str) -> str:
    """Description of a column or report key. Falls back to the key itself."""
    return TEXTS.get(key, key)
