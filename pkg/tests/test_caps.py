import unittest
from unittest.mock import patch

from cleangog.caps import ElementCapMonitor, NoCapMonitor
from cleangog.exceptions import CapExceeded
from cleangog.schemas import RunConfig


class TestCapMonitors(unittest.TestCase):
    """
    Unit tests for the cap monitors.

    These tests verify that:
    - Requests up to a cap are admitted and tracked as peaks
    - A request above a cap raises CapExceeded naming the cap
    - Usage above the warning threshold is logged
    - NoCapMonitor never refuses anything

    Why is this important?
    -----------------------------------
    Quotient groups and regular representations grow exponentially with the
    depth. Caps are what turn a runaway enumeration into a clean exit code.
    """

    def setUp(self):
        self.monitor = ElementCapMonitor(element_cap=10, monomial_cap=100, order_cap=50, depth_cap=3)

    def test_admit_within_cap(self):
        self.monitor.admit("element", 5)
        self.monitor.admit("element", 3)
        self.assertEqual(self.monitor.usage(), {"element": 5})
        self.assertIsNone(self.monitor.check("element", 10))

    def test_exceeding_a_cap(self):
        with self.assertRaises(CapExceeded) as ctx:
            self.monitor.admit("element", 11)
        self.assertEqual(ctx.exception.cap, "element")
        self.assertEqual(ctx.exception.limit, 10)
        self.assertEqual(ctx.exception.requested, 11)
        self.assertNotIn("element", self.monitor.usage())

    def test_check_reports_cap(self):
        info = self.monitor.check("depth", 4)
        self.assertEqual(info, {"capped": True, "cap": "depth", "limit": 3, "requested": 4})

    def test_warning_threshold(self):
        with patch("cleangog.caps.logger") as mock_logger:
            self.monitor.admit("element", 8)
            mock_logger.warning.assert_not_called()
            self.monitor.admit("element", 9)
            mock_logger.warning.assert_called_once()

    def test_depth_at_cap_does_not_warn(self):
        with patch("cleangog.caps.logger") as mock_logger:
            self.monitor.admit("depth", 3)
            mock_logger.warning.assert_not_called()
        self.assertEqual(self.monitor.usage(), {"depth": 3})

    def test_unknown_cap_is_admitted(self):
        self.monitor.admit("anything", 10 ** 9)
        self.assertIsNone(self.monitor.limit("anything"))

    def test_invalid_limits(self):
        with self.assertRaises(ValueError):
            ElementCapMonitor(element_cap=0)

    def test_no_cap_monitor(self):
        monitor = NoCapMonitor()
        monitor.admit("element", 10 ** 12)
        self.assertIsNone(monitor.check("order", 10 ** 12))
        self.assertEqual(monitor.usage(), {})
        self.assertIsNone(monitor.limit("element"))

    def test_monitor_from_config(self):
        monitor = RunConfig(p=3, element_cap=64).monitor()
        self.assertEqual(monitor.limit("element"), 64)
        self.assertEqual(monitor.limit("depth"), 3)


if __name__ == "__main__":
    unittest.main()
