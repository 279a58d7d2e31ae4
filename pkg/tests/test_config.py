# Copyright 2025 evoforms developers
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
#  under the License.

"""
Test program for config module
"""

import pathlib
import tempfile
from unittest import TestCase

from evoforms.config import EngineConfig, config_from_specific_data, load_config
from evoforms.exceptions import ConfigurationError


class TestConfigFromSpecificData(TestCase):
    """Test class for config_from_specific_data function."""

    def test_config_from_specific_data_none(self):
        """Test when specific_data is missing."""
        self.assertEqual(EngineConfig(), config_from_specific_data(None))

    def test_config_from_specific_data_normal(self):
        """Test when every value is valid."""
        data = {"seed": 5, "samples": 64, "tolerance": 1.0e-6, "accept_probable": True, "workers": 4}
        config = config_from_specific_data(data)
        self.assertEqual(5, config.seed)
        self.assertEqual(64, config.samples)
        self.assertEqual(1.0e-6, config.tolerance)
        self.assertTrue(config.accept_probable)
        self.assertEqual(4, config.workers)

    def test_config_from_specific_data_invalid_type(self):
        """Test when a value has the wrong type."""
        with self.assertLogs("evoforms.config", level="WARNING"):
            config = config_from_specific_data({"seed": "five", "samples": True})
        self.assertEqual(EngineConfig().seed, config.seed)
        self.assertEqual(EngineConfig().samples, config.samples)

    def test_config_from_specific_data_out_of_range(self):
        """Test when a value is outside its range."""
        with self.assertLogs("evoforms.config", level="WARNING"):
            config = config_from_specific_data({"samples": 8, "max_dimension": 9, "log_level": "TRACE"})
        self.assertEqual(32, config.samples)
        self.assertEqual(8, config.max_dimension)
        self.assertEqual("WARNING", config.log_level)

    def test_config_from_specific_data_tolerance_range(self):
        """Test when the tolerance is not below 1."""
        with self.assertLogs("evoforms.config", level="WARNING"):
            config = config_from_specific_data({"tolerance": 1})
        self.assertEqual(1.0e-9, config.tolerance)


class TestLoadConfig(TestCase):
    """Test class for load_config function."""

    def test_load_config_packaged(self):
        """Test for the packaged engine.yaml."""
        self.assertEqual(EngineConfig(), load_config())

    def test_load_config_file(self):
        """Test for a user configuration file."""
        with tempfile.TemporaryDirectory() as directory:
            path = pathlib.Path(directory) / "engine.yaml"
            path.write_text("engine: evoforms\nspecific_data:\n    seed: 3\n    workers: 2\n", encoding="utf-8")
            config = load_config(path)
        self.assertEqual(3, config.seed)
        self.assertEqual(2, config.workers)

    def test_load_config_no_specific_data(self):
        """Test when the file has no specific_data."""
        with tempfile.TemporaryDirectory() as directory:
            path = pathlib.Path(directory) / "engine.yaml"
            path.write_text("engine: evoforms\n", encoding="utf-8")
            with self.assertLogs("evoforms.config", level="WARNING"):
                config = load_config(path)
        self.assertEqual(EngineConfig(), config)

    def test_load_config_missing_file(self):
        """Test when the file does not exist."""
        with self.assertRaises(ConfigurationError):
            load_config("/nonexistent/engine.yaml")

    def test_load_config_not_mapping(self):
        """Test when the file is not a YAML mapping."""
        with tempfile.TemporaryDirectory() as directory:
            path = pathlib.Path(directory) / "engine.yaml"
            path.write_text("- seed\n- 3\n", encoding="utf-8")
            with self.assertRaises(ConfigurationError):
                load_config(path)

    def test_load_config_broken_yaml(self):
        """Test when the file is not valid YAML."""
        with tempfile.TemporaryDirectory() as directory:
            path = pathlib.Path(directory) / "engine.yaml"
            path.write_text("specific_data: [seed\n", encoding="utf-8")
            with self.assertRaises(ConfigurationError):
                load_config(path)
