"""
Output module for JSON, CSV and Excel reports.
"""
from .report_writer import generate_report_workbook, to_json, write_csv, write_json

__all__ = ['generate_report_workbook', 'to_json', 'write_csv', 'write_json']
