from uowc_offset.oracle.checks import (
    ORACLE_CHECKS,
    OracleCheck,
    OracleCheckConfig,
    OracleState,
)
from uowc_offset.oracle.sampling import (
    NearestNeighborSample,
    mc_expected_depth,
    mc_nn_distance,
    mc_power_angular,
    mc_power_full,
)

__all__ = [
    "ORACLE_CHECKS",
    "NearestNeighborSample",
    "OracleCheck",
    "OracleCheckConfig",
    "OracleState",
    "mc_expected_depth",
    "mc_nn_distance",
    "mc_power_angular",
    "mc_power_full",
]
