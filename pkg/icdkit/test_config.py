import logging
import sys
import unittest
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from icdkit.config import ENV_KEYS, Settings, configure_logging, load_settings, validate
from icdkit.errors import ConfigurationError, IcdKitError


class TestSettings(unittest.TestCase):

    def test_defaults(self):
        s = load_settings({}, dotenv=False)
        self.assertEqual(s, Settings())
        self.assertEqual((s.tol, s.nullspace_tol, s.seed), (1e-9, 1e-10, 0))
        self.assertEqual((s.opt_restarts, s.opt_steps, s.workers), (32, 500, 1))

    def test_environment_overrides(self):
        s = load_settings({"ICDKIT_TOL": "1e-6", "ICDKIT_SEED": "42", "ICDKIT_WORKERS": "4",
                           "ICDKIT_LOG_LEVEL": "debug", "ICDKIT_OPT_STEP_SIZE": ""}, dotenv=False)
        self.assertEqual(s.tol, 1e-6)
        self.assertEqual(s.seed, 42)
        self.assertEqual(s.workers, 4)
        self.assertEqual(s.log_level, "debug")
        self.assertEqual(s.opt_step_size, Settings().opt_step_size)

    def test_every_key_maps_to_a_field(self):
        fields = set(Settings.__dataclass_fields__)
        for key, (field, _) in ENV_KEYS.items():
            self.assertTrue(key.startswith("ICDKIT_"))
            self.assertIn(field, fields)

    def test_unparseable_values(self):
        with self.assertRaises(ConfigurationError) as ctx:
            load_settings({"ICDKIT_SEED": "forty-two"}, dotenv=False)
        self.assertIn("ICDKIT_SEED", str(ctx.exception))
        self.assertIsInstance(ctx.exception, IcdKitError)

    def test_ranges(self):
        for bad in ({"tol": -1.0}, {"opt_restarts": 0}, {"workers": 0}, {"positivity_samples": -5},
                    {"log_level": "chatty"}):
            with self.assertRaises(ConfigurationError, msg=bad):
                validate(Settings(**bad))
        self.assertEqual(validate(Settings(tol=0.0)).tol, 0.0)

    def test_replace_ignores_none(self):
        s = Settings(seed=3)
        self.assertEqual(s.replace(seed=None, tol=None), s)
        self.assertEqual(s.replace(seed=5).seed, 5)
        self.assertEqual(s.replace(tol=1e-3).seed, 3)

    def test_configure_logging_accepts_names(self):
        configure_logging("info")
        configure_logging("WARNING")
        self.assertIsInstance(logging.getLogger("icdkit").getEffectiveLevel(), int)


if __name__ == '__main__':
    unittest.main()
