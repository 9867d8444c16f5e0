"""Conductance, certificates, assumption audits and ratio diagnostics."""

from .audit import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    AssumptionReport,
    AuditBudget,
    ClauseRecord,
    check_assumptions_1,
    check_assumptions_2,
)
from .certificates import (
    DriftCertificate,
    MinorizationCertificate,
    drift_check,
    minorization_check,
    minorization_interval,
    reaudit,
)
from .conductance import (
    ConductanceValue,
    cheeger_brackets,
    cheeger_statistic,
    conductance_mc,
    conductance_quadrature,
)
from .partition import Mode, Partition, literal_partition, symmetric_partition, two_mode_partition
from .ratios import RatioDiagnostics, metastability_ratios

__all__ = [
    "AssumptionReport", "AuditBudget", "ClauseRecord", "ConductanceValue", "DriftCertificate",
    "FAIL", "INCONCLUSIVE", "MinorizationCertificate", "Mode", "PASS", "Partition",
    "RatioDiagnostics", "check_assumptions_1", "check_assumptions_2", "cheeger_brackets",
    "cheeger_statistic", "conductance_mc", "conductance_quadrature", "drift_check",
    "literal_partition", "metastability_ratios", "minorization_check", "minorization_interval",
    "reaudit", "symmetric_partition", "two_mode_partition",
]
