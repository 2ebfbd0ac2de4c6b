"""
UI helper functions for formatting run results.
"""

import html as html_lib
from typing import Any, Dict, List, Optional

from .status import CheckStatus

_CARD = "border: 2px solid #475569; padding: 20px; margin: 15px 0; border-radius: 10px; background-color: #1e293b; box-shadow: 0 2px 4px rgba(0,0,0,0.3);"
_TEXT = "color: #e2e8f0; margin: 8px 0;"
_LABEL = "color: #f8fafc;"

_STATUS_STYLE = {
    CheckStatus.PASSED: ("✅", "#4ade80"),
    CheckStatus.FAILED: ("❌", "#f87171"),
    CheckStatus.SKIPPED: ("⏭️", "#94a3b8"),
    CheckStatus.PENDING: ("⏳", "#fbbf24"),
}


def _escape(value: Any) -> str:
    return html_lib.escape(str(value))


def format_report(report: Dict[str, Any]) -> str:
    """
    Format a verification report as HTML.

    Args:
        report: Report built by processor.verify_trace

    Returns:
        HTML string with the overall status, one line per check and the
        certificates of every adversary.
    """
    if not report:
        return "<p>No report yet. Run a config first!</p>"
    if 'error' in report:
        return f"<p>❌ {_escape(report['error'])}</p>"

    icon, color = _STATUS_STYLE.get(report.get('status'), ("❓", "#e2e8f0"))
    html = f"""
    <div style="{_CARD}">
        <h3 style="margin-top: 0; color: #fb923c; font-size: 1.3em;">{icon} {_escape(report.get('engine'))} at horizon {_escape(report.get('horizon'))}</h3>
        <p style="{_TEXT}"><strong style="{_LABEL}">Status:</strong> <span style="color: {color};">{_escape(report.get('status'))}</span></p>
        <p style="{_TEXT}"><strong style="{_LABEL}">Records:</strong> {_escape(report.get('summary', {}).get('records', 0))}</p>
    """

    html += "<h4 style='color: #60a5fa;'>Checks</h4><ul>"
    for name, check in report.get('checks', {}).items():
        check_icon, check_color = _STATUS_STYLE.get(check.get('status'), ("❓", "#e2e8f0"))
        detail = check.get('detail')
        html += f"<li style='color: {check_color};'>{check_icon} {_escape(name)}"
        if detail:
            html += f" <span style='color: #94a3b8;'>({_escape(detail)})</span>"
        html += "</li>"
    html += "</ul>"

    certificates = report.get('certificates', {})
    if certificates:
        html += "<h4 style='color: #60a5fa;'>Certificates</h4><ul>"
        for requirement, text in certificates.items():
            html += f"<li style='{_TEXT}'><strong style='{_LABEL}'>{_escape(requirement)}</strong>: {_escape(text)}</li>"
        html += "</ul>"

    profile = report.get('summary', {}).get('profile')
    if profile:
        html += f"<p style='{_TEXT}'><strong style='{_LABEL}'>📈 Step profile:</strong> {_escape(profile.get('fit'))}</p>"

    html += "</div>"
    return html


def format_fixture_list(configs: List[str]) -> str:
    """Markdown list of the shipped fixture configs."""
    if not configs:
        return "No fixture configs found."
    return "\n".join(f"- `{name}`" for name in configs)


def trace_preview(text: str, limit: Optional[int] = 400) -> str:
    """The first `limit` lines of a trace, with a note on how many were cut."""
    lines = text.splitlines()
    if limit is None or len(lines) <= limit:
        return text
    return "\n".join(lines[:limit]) + f"\n... {len(lines) - limit} more records"
