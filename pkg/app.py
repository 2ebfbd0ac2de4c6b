"""
Punctual - finite-stage simulator for punctual structure constructions.

This is the main Gradio UI application.
"""

import gradio as gr
import yaml

from src.config import get_fixtures_path
from src.errors import PunctualError
from src.processor import run_and_verify
from src.storage import parse_run_config
from src.ui import format_fixture_list, format_report, trace_preview


def list_fixture_configs() -> list:
    """Names of the shipped YAML configs."""
    return sorted(p.name for p in get_fixtures_path().glob("*.yaml"))


def load_fixture_text(name: str) -> str:
    """
    Read a shipped config so it can be edited before running.

    Args:
        name: File name inside the fixtures directory

    Returns:
        The YAML text, or an empty string when nothing is selected.
    """
    if not name:
        return ""
    return (get_fixtures_path() / name).read_text()


def run_config_text(config_text: str, horizon: float | None = None):
    """
    Run a pasted or selected config and verify the trace in memory.

    Args:
        config_text: YAML run config
        horizon: Optional horizon override (0 keeps the config's value)

    Returns:
        Tuple of (trace text, report HTML, step profile CSV)
    """
    if not config_text or not config_text.strip():
        return "", "<p>Please paste a run config or pick a fixture.</p>", ""
    try:
        raw = yaml.safe_load(config_text) or {}
        if horizon:
            raw = {**raw, "horizon": int(horizon)} if isinstance(raw, dict) else raw
        config = parse_run_config(raw, base=get_fixtures_path())
        trace, report, profile = run_and_verify(config)
    except yaml.YAMLError as e:
        return "", f"<p>❌ Cannot parse config: {e}</p>", ""
    except PunctualError as e:
        return "", f"<p>❌ {type(e).__name__}: {e}</p>", ""

    return trace_preview(trace.render()), format_report(report), profile.csv() if profile else ""


with gr.Blocks(
    title="Punctual - stage-by-stage constructions",
    theme=gr.themes.Soft(
        primary_hue="orange",
        secondary_hue="blue",
        neutral_hue="slate",
    )
) as demo:
    gr.Markdown(
        """
        # 🌱 Punctual
        ### Run diagonalizers and copy constructions stage by stage

        Pick a shipped config or paste your own, run it to its horizon and
        read the trace, the verification report and the step profile.
        """
    )

    with gr.Row():
        fixture_input = gr.Dropdown(
            label="Shipped config",
            choices=list_fixture_configs(),
            value=None,
            scale=3
        )
        horizon_input = gr.Number(
            label="Horizon override",
            value=0,
            precision=0,
            scale=1,
            info="0 keeps the config's horizon"
        )
        run_btn = gr.Button("🔄 Run", variant="primary", scale=1)

    config_input = gr.Code(label="Run config (YAML)", language="yaml", lines=12)

    with gr.Tabs():
        with gr.Tab("Report"):
            report_output = gr.HTML(label="Verification report")
        with gr.Tab("Trace"):
            trace_output = gr.Textbox(label="Trace", interactive=False, lines=20)
        with gr.Tab("Step profile"):
            profile_output = gr.Textbox(label="n,steps", interactive=False, lines=12)
        with gr.Tab("Fixtures"):
            gr.Markdown(format_fixture_list(list_fixture_configs()))

    fixture_input.change(
        fn=load_fixture_text,
        inputs=fixture_input,
        outputs=config_input
    )

    run_btn.click(
        fn=run_config_text,
        inputs=[config_input, horizon_input],
        outputs=[trace_output, report_output, profile_output]
    )


if __name__ == "__main__":
    demo.launch()
