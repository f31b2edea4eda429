import unittest
import shutil
import struct
import tempfile
import sys
import os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src', 'python')))

import numpy as np

from eit_channel.errors import ParameterError
from eit_channel.fileio import atomic_write, check_writable
from eit_channel.series_io import (SeriesHeader, decode_series, encode_series, read_series_binary,
                                   read_series_csv, write_series_binary, write_series_csv)
from eit_channel.synth import TimeSeries


class TestSeriesHeader(unittest.TestCase):
    def test_header_serialization(self):
        h = SeriesHeader(4.0e6, 3, 7)
        data = h.serialize()
        self.assertEqual(len(data), 28)
        self.assertEqual(data[:4], b'EITS')
        # Length and seed are little-endian 64-bit
        self.assertEqual(data[12:20], b'\x03' + b'\x00' * 7)
        self.assertEqual(struct.unpack('<d', data[4:12])[0], 4.0e6)

        h2 = SeriesHeader.deserialize(data)
        self.assertEqual((h2.sample_rate, h2.length, h2.seed), (4.0e6, 3, 7))

    def test_missing_seed(self):
        data = SeriesHeader(1.0, 1, None).serialize()
        self.assertEqual(data[20:], b'\xff' * 8)
        self.assertIsNone(SeriesHeader.deserialize(data).seed)

    def test_bad_header(self):
        with self.assertRaises(ParameterError):
            SeriesHeader.deserialize(b'EITS')
        with self.assertRaises(ParameterError):
            SeriesHeader.deserialize(b'XXXX' + b'\x00' * 24)


class TestSeriesCodec(unittest.TestCase):
    def test_encode_decode(self):
        s = TimeSeries(np.array([0.5, -1.25, 3.0]), 4.0e6, seed=11)
        data = encode_series(s)
        self.assertEqual(len(data), 28 + 3 * 8)
        back = decode_series(data)
        np.testing.assert_array_equal(back.samples, s.samples)
        self.assertEqual((back.sample_rate, back.seed), (4.0e6, 11))

    def test_truncated_body(self):
        data = encode_series(TimeSeries(np.ones(4), 1.0))
        with self.assertRaises(ParameterError):
            decode_series(data[:-3])


class TestSeriesFiles(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_binary_file(self):
        path = os.path.join(self.test_dir, "trace.eits")
        s = TimeSeries(np.linspace(-1, 1, 17), 2.0e6, seed=3)
        write_series_binary(s, path)
        back = read_series_binary(path)
        np.testing.assert_array_equal(back.samples, s.samples)
        self.assertEqual(os.listdir(self.test_dir), ["trace.eits"])

    def test_csv_file(self):
        path = os.path.join(self.test_dir, "trace.csv")
        s = TimeSeries(np.array([0.1, 0.2, 0.30000000000000004, -7.0]), 4.0e6)
        write_series_csv(s, path)
        with open(path) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "time_s,value")
        self.assertEqual(lines[3], "5e-07,0.30000000000000004")
        back = read_series_csv(path)
        np.testing.assert_array_equal(back.samples, s.samples)
        self.assertAlmostEqual(back.sample_rate / 4.0e6, 1.0, places=9)

    def test_csv_bad_header(self):
        path = os.path.join(self.test_dir, "bad.csv")
        atomic_write(path, "t,v\n0,1\n1,2\n")
        with self.assertRaises(ParameterError):
            read_series_csv(path)

    def test_csv_time_must_increase(self):
        path = os.path.join(self.test_dir, "flat.csv")
        atomic_write(path, "time_s,value\n0,1\n0,2\n")
        with self.assertRaises(ParameterError):
            read_series_csv(path)

    def test_csv_time_must_increase_everywhere(self):
        # first and last stamps span a positive interval, the middle runs backwards
        path = os.path.join(self.test_dir, "jumbled.csv")
        atomic_write(path, "time_s,value\n0,1\n2e-6,2\n1e-6,3\n3e-6,4\n")
        with self.assertRaisesRegex(ParameterError, "strictly increasing"):
            read_series_csv(path)

    def test_csv_non_numeric_row(self):
        path = os.path.join(self.test_dir, "text.csv")
        atomic_write(path, "time_s,value\n0,1\n1e-6,oops\n")
        with self.assertRaisesRegex(ParameterError, r"text\.csv:3: non-numeric"):
            read_series_csv(path)

    def test_csv_wrong_column_count(self):
        path = os.path.join(self.test_dir, "wide.csv")
        atomic_write(path, "time_s,value\n0,1,2\n")
        with self.assertRaisesRegex(ParameterError, r"wide\.csv:2:"):
            read_series_csv(path)

    def test_check_writable(self):
        target = os.path.join(self.test_dir, "nested", "out")
        check_writable(target)
        self.assertEqual(os.listdir(target), [])


if __name__ == '__main__':
    unittest.main()
