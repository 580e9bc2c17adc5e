"""
PDF Generator for Simulation Study Reports

This module renders the outcome of a replicate study as a PDF report: the
simulation design, the summary row in 'mean(sd)' form and one line per
replicate.

Key Features:
    - Headers, sections and grid tables styled with reportlab platypus
    - Automatic page breaks for long replicate lists (repeated header row)
    - Reproducible bytes: documents are built in invariant mode and carry
      no generation timestamp
"""

from io import BytesIO
from typing import List, Optional

from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from .estimation.replicate import SUMMARY_MEASURES, ReplicateStatus, ReplicateStudy
from .models import TuneGrid

GRID_STYLE = [
    ('FONT', (0, 0), (-1, 0), 'Helvetica-Bold', 10),
    ('FONT', (0, 1), (-1, -1), 'Helvetica', 10),
    ('TEXTCOLOR', (0, 0), (-1, -1), colors.HexColor('#2c3e50')),
    ('GRID', (0, 0), (-1, -1), 0.5, colors.HexColor('#bdc3c7')),
    ('VALIGN', (0, 0), (-1, -1), 'TOP'),
    ('LEFTPADDING', (0, 0), (-1, -1), 6),
    ('RIGHTPADDING', (0, 0), (-1, -1), 6),
    ('TOPPADDING', (0, 0), (-1, -1), 4),
    ('BOTTOMPADDING', (0, 0), (-1, -1), 4),
    ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#ecf0f1')),
]


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


class StudyReportGenerator:
    """
    Generator for replicate study PDF reports.

    Lays the summary out like a simulation results table: one row per
    design with mean(sd) of MSE, F1, d0 and Acc_all.
    """

    def __init__(self):
        """Initialize PDF generator with default styles."""
        self.styles = getSampleStyleSheet()
        self._setup_custom_styles()

    def _setup_custom_styles(self):
        """Create custom paragraph styles for the report."""
        self.styles.add(ParagraphStyle(
            name='CustomTitle',
            parent=self.styles['Title'],
            fontSize=20,
            textColor=colors.HexColor('#1a1a1a'),
            spaceAfter=20,
            alignment=TA_CENTER,
            fontName='Helvetica-Bold'
        ))

        self.styles.add(ParagraphStyle(
            name='SectionHeading',
            parent=self.styles['Heading1'],
            fontSize=14,
            textColor=colors.HexColor('#2c3e50'),
            spaceAfter=10,
            spaceBefore=16,
            fontName='Helvetica-Bold'
        ))

    def generate_report(self, study: ReplicateStudy, grid: Optional[TuneGrid] = None) -> BytesIO:
        """
        Generate the PDF report of a study.

        Args:
            study: Completed replicate study
            grid: Tuning grid used for every replicate, shown in the design section

        Returns:
            BytesIO: PDF file as bytes buffer
        """
        buffer = BytesIO()
        spec = study.spec
        doc = SimpleDocTemplate(
            buffer,
            pagesize=landscape(A4),
            rightMargin=1.5*cm,
            leftMargin=1.5*cm,
            topMargin=1.5*cm,
            bottomMargin=1.5*cm,
            title=f"Simulation study - {spec.family.value}",
            author="colored_ggm",
            invariant=True,
        )

        story = []
        story.append(Paragraph("Colored Graphical Model Simulation Study", self.styles['CustomTitle']))

        story.append(Paragraph("Design", self.styles['SectionHeading']))
        design = [
            ["Family", spec.family.value],
            ["Variables", str(spec.dimension)],
            ["Sample size", str(spec.n)],
            ["Replicates", str(len(study.outcomes))],
            ["Base seed", str(spec.seed)],
        ]
        if grid is not None:
            design.append(["Search", grid.mode.value])
            for name in ("lambda1", "lambda2", "lambda3", "tau"):
                design.append([name, ", ".join(f"{v:g}" for v in getattr(grid, name))])
        design_table = Table(design, colWidths=[4*cm, 14*cm])
        design_table.setStyle(TableStyle([
            ('FONT', (0, 0), (0, -1), 'Helvetica-Bold', 10),
            ('FONT', (1, 0), (1, -1), 'Helvetica', 10),
            ('TEXTCOLOR', (0, 0), (-1, -1), colors.HexColor('#2c3e50')),
            ('LEFTPADDING', (0, 0), (-1, -1), 0),
            ('BOTTOMPADDING', (0, 0), (-1, -1), 4),
        ]))
        story.append(design_table)

        story.append(Paragraph("Summary", self.styles['SectionHeading']))
        row = study.summary_row()
        header = ["family", "p", "n", *SUMMARY_MEASURES, "failed"]
        summary_table = Table([header, [str(row[name]) for name in header]])
        summary_table.setStyle(TableStyle(GRID_STYLE))
        story.append(summary_table)
        story.append(Spacer(1, 0.5*cm))

        story.append(Paragraph("Replicates", self.styles['SectionHeading']))
        story.append(self._replicate_table(study))

        doc.build(story)
        buffer.seek(0)
        return buffer

    def _replicate_table(self, study: ReplicateStudy) -> Table:
        header = ["r", "seed", "status", "lambda1", "lambda2", "lambda3", "tau", "df", *SUMMARY_MEASURES]
        rows: List[List[str]] = [header]
        for outcome in study.outcomes:
            record = outcome.to_row()
            cells = [str(outcome.index), str(outcome.seed), outcome.status.value]
            cells += [_fmt(record[name], 3) for name in ("lambda1", "lambda2", "lambda3", "tau")]
            cells.append(_fmt(record["df"]))
            cells += [_fmt(record[name]) for name in SUMMARY_MEASURES]
            rows.append(cells)
        table = Table(rows, repeatRows=1)
        style = list(GRID_STYLE)
        for i, outcome in enumerate(study.outcomes, start=1):
            if outcome.status == ReplicateStatus.FAILED:
                style.append(('TEXTCOLOR', (2, i), (2, i), colors.HexColor('#e74c3c')))
        table.setStyle(TableStyle(style))
        return table


# Singleton instance
pdf_generator = StudyReportGenerator()
