import os
import markdown
from jinja2 import Template
import pandas as pd
import logging

from experiments.report import CHECK_COLUMNS, FAIL, MONITOR, PASS, SKIPPED

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
PARAMETER_COLUMNS = ["parameter", "value"]


class ReportGenerator:
    """Writes an experiment report as CSV files, a markdown summary and an optional HTML page"""

    def __init__(self, report, output_dir, detailed=False):
        """
        Initialize the report generator

        Args:
            report (ExperimentReport): Finished experiment report
            output_dir (str): Directory the files are written to
            detailed (bool): Whether to also render the detailed HTML report
        """
        self.report = report
        self.output_dir = output_dir
        self.detailed = detailed

    def generate(self):
        """
        Build the summary and write every report file

        Returns:
            dict: Summary text, failed checks and the written file paths
        """
        summary = self._generate_summary()
        files = self._write_files(summary)
        result = {
            "summary": summary,
            "failures": [record.check for record in self.report.failures()],
            "files": files,
        }
        if self.detailed:
            html = self._generate_detailed_html(summary)
            path = self._path("report.html")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(html)
            files.append(path)
            result["detailed_report"] = html
        return result

    def _path(self, suffix):
        return os.path.join(self.output_dir, f"{self.report.experiment}_{suffix}")

    def _write_files(self, summary):
        os.makedirs(self.output_dir, exist_ok=True)
        files = []

        checks = self.report.to_frame()
        path = self._path("checks.csv")
        checks.to_csv(path, index=False, columns=CHECK_COLUMNS, float_format=FLOAT_FORMAT)
        files.append(path)

        parameters = pd.DataFrame(
            [[key, self._format_value(value)] for key, value in self.report.parameters.items()],
            columns=PARAMETER_COLUMNS,
        )
        path = self._path("parameters.csv")
        parameters.to_csv(path, index=False)
        files.append(path)

        for name, table in self.report.tables.items():
            path = self._path(f"{name}.csv")
            table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            files.append(path)

        path = self._path("summary.md")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(summary)
        files.append(path)
        logger.info(f"Wrote {len(files)} report files to {self.output_dir}")
        return files

    @staticmethod
    def _format_value(value):
        if isinstance(value, float):
            return FLOAT_FORMAT % value
        return str(value)

    def _generate_summary(self):
        """Generate a markdown summary: counts, failed checks first, then every category"""
        report = self.report
        counts = report.counts()
        verdict = "PASSED" if report.passed else "FAILED"

        summary = f"## {report.experiment}\n\n"
        summary += f"Result: **{verdict}**\n\n"

        summary += "### Checks\n\n"
        summary += f"- {counts[FAIL]} failed checks\n"
        summary += f"- {counts[MONITOR]} monitored values\n"
        summary += f"- {counts[SKIPPED]} skipped checks\n"
        summary += f"- {counts[PASS]} checks passed\n\n"

        failures = report.failures()
        if failures:
            summary += "### Failed Checks\n\n"
            for record in failures:
                summary += f"- **{record.category} / {record.check}**: {record.value:.6g} (needs {record.threshold})"
                summary += f" [{record.provenance}]\n"
            summary += "\n"

        categories = []
        for record in report.records:
            if record.category not in categories:
                categories.append(record.category)
        for category in categories:
            summary += f"### {category}\n\n"
            for record in report.records:
                if record.category != category:
                    continue
                threshold = f" (threshold {record.threshold})" if record.threshold else ""
                summary += f"- {record.status}: {record.check} = {record.value:.6g}{threshold}\n"
            summary += "\n"
        return summary

    def _generate_detailed_html(self, summary):
        """Render the lab sheet: verdict, run parameters, checks per category and the numeric tables"""
        report = self.report
        groups = {}
        for record in report.records:
            groups.setdefault(record.category, []).append(record)
        try:
            return Template(LAB_SHEET).render(
                experiment=report.experiment,
                verdict="passed" if report.passed else "failed",
                counts=report.counts(),
                summary_html=markdown.markdown(summary),
                parameters=[(key, self._format_value(value)) for key, value in report.parameters.items()],
                groups=list(groups.items()),
                row_class=ROW_CLASS,
                tables=[
                    (name, table.to_html(index=False, float_format=lambda v: f"{v:.6g}", classes="numeric", border=0))
                    for name, table in report.tables.items()
                ],
            )
        except Exception as e:
            logger.error(f"Could not render the lab sheet for {report.experiment}: {str(e)}")
            return (
                f"<!DOCTYPE html><html><head><title>{report.experiment}: no lab sheet</title></head><body>"
                f"<p>Rendering failed: {str(e)}</p>"
                f"<p>{report.experiment}_checks.csv and {report.experiment}_summary.md hold the full results.</p>"
                "</body></html>"
            )


ROW_CLASS = {PASS: "row-pass", MONITOR: "row-monitor", SKIPPED: "row-skipped", FAIL: "row-fail"}

LAB_SHEET = """<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="UTF-8">
<title>{{ experiment }}: lab sheet</title>
<style>
main { font: 14px/1.45 "DejaVu Sans Mono", Menlo, monospace; margin: 2em 4%; }
header.verdict-passed { border-top: 6px solid #2e7d32; }
header.verdict-failed { border-top: 6px solid #c62828; }
table.tally td { padding: 0 1.2em 0 0; }
table.sheet, table.numeric { border-collapse: collapse; margin: 0.5em 0 1.5em; }
table.sheet th, table.sheet td, table.numeric th, table.numeric td { border: 1px solid #ccc; padding: 2px 8px; }
table.numeric td { text-align: right; }
tr.row-fail { background: #fde0e0; }
tr.row-monitor { background: #fff6d5; }
tr.row-skipped { color: #888; }
details { margin-top: 2em; }
</style>
</head>
<body><main>
<header class="verdict-{{ verdict }}">
<h1>{{ experiment }}</h1>
<p>verdict: <b>{{ verdict }}</b></p>
<table class="tally"><tr>
{% for status, count in counts.items() %}<td>{{ status }} {{ count }}</td>{% endfor %}
</tr></table>
</header>

<section id="run">
<h2>Run parameters</h2>
<table class="sheet">
{% for key, value in parameters %}<tr><td>{{ key }}</td><td>{{ value }}</td></tr>
{% endfor %}</table>
</section>

<section id="checks">
{% for category, records in groups %}
<h2>{{ category }}</h2>
<table class="sheet">
<tr><th>check</th><th>status</th><th>value</th><th>threshold</th><th>provenance</th><th>detail</th></tr>
{% for record in records %}<tr class="{{ row_class[record.status] }}">
<td>{{ record.check }}</td><td>{{ record.status }}</td><td>{{ "%.6g"|format(record.value) }}</td>
<td>{{ record.threshold }}</td><td>{{ record.provenance }}</td><td>{{ record.detail }}</td>
</tr>
{% endfor %}</table>
{% endfor %}
</section>

<section id="tables">
{% for name, html in tables %}
<h2 id="table-{{ name }}">{{ name }}</h2>
{{ html | safe }}
{% endfor %}
</section>

<details><summary>markdown summary</summary>
{{ summary_html | safe }}
</details>
</main></body>
</html>
"""
