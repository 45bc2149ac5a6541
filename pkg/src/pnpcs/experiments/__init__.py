"""Monte Carlo experiment campaigns: configs, runners and output formats."""

from .campaigns import RobustReport, run_recovery_campaign, run_robust
from .concentration import ConcentrationStudy, run_concentration
from .config import CampaignConfig, parse_config_text, read_config, write_manifest
from .ecg import EcgReport, run_ecg, snr_db
from .records import PhaseGrid, TrialRecord, psnr_db, wilson_interval

__all__ = [
    "CampaignConfig",
    "ConcentrationStudy",
    "EcgReport",
    "PhaseGrid",
    "RobustReport",
    "TrialRecord",
    "parse_config_text",
    "psnr_db",
    "read_config",
    "run_concentration",
    "run_ecg",
    "run_recovery_campaign",
    "run_robust",
    "snr_db",
    "wilson_interval",
    "write_manifest",
]
