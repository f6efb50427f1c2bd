"""
Configuration Manager for the Quantum Graph Spectral Solver
"""

import json
import os
from pathlib import Path
from typing import Dict, Any, Optional

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    # Look for .env file in the project root (two levels up from this file)
    env_path = Path(__file__).parent.parent.parent / '.env'
    if env_path.exists():
        load_dotenv(env_path)
except ImportError:
    # python-dotenv not available, skip loading
    pass

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / 'config' / 'config.json'


class ConfigManager:
    """
    Manages solver defaults stored in config/config.json.

    The file location can be overridden with the QGRAPH_CONFIG environment
    variable (also read from a .env file at the repository root).
    """

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize the configuration manager.

        Args:
            config_path: Path to the configuration file. If None, use
                QGRAPH_CONFIG or the packaged config/config.json.
        """
        self.config_path = str(config_path or os.environ.get('QGRAPH_CONFIG') or DEFAULT_CONFIG_PATH)
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        path = Path(self.config_path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found at {self.config_path}")
        return json.loads(path.read_text(encoding='utf-8'))

    def get_value(self, section: str, key: str, default: Any = None) -> Any:
        """Value of `key` in `section`, or `default` when either is missing."""
        try:
            return self.config[section][key]
        except (KeyError, TypeError):
            return default

    def section(self, section: str) -> Dict[str, Any]:
        """Return a copy of one configuration section (empty if absent)."""
        return dict(self.config.get(section, {}))
