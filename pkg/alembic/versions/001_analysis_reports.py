"""Analysis reports

Revision ID: 001
Revises: 
Create Date: 2026-10-19 12:00:00.000000

"""
from alembic import op
import sqlalchemy as sa

# revision identifiers, used by Alembic.
revision = '001'
down_revision = None
branch_labels = None
depends_on = None

report_status = sa.Enum('QUEUED', 'RUNNING', 'COMPLETED', 'FAILED', name='reportstatus')


def upgrade():
    op.create_table('analysis_reports',
        sa.Column('id', sa.Integer(), nullable=False),
        sa.Column('spec_json', sa.Text(), nullable=False),
        sa.Column('dimension', sa.Integer(), nullable=True),
        sa.Column('seed', sa.Integer(), nullable=False),
        sa.Column('budget', sa.Integer(), nullable=False),
        sa.Column('refine_steps', sa.Integer(), nullable=True),
        sa.Column('status', report_status, nullable=True),
        sa.Column('task_id', sa.String(255), nullable=True),
        sa.Column('report_json', sa.Text(), nullable=True),
        sa.Column('error', sa.Text(), nullable=True),
        sa.Column('created_at', sa.DateTime(timezone=True), server_default=sa.text('CURRENT_TIMESTAMP'), nullable=True),
        sa.Column('completed_at', sa.DateTime(timezone=True), nullable=True),
        sa.PrimaryKeyConstraint('id')
    )
    op.create_index(op.f('ix_analysis_reports_id'), 'analysis_reports', ['id'], unique=False)
    op.create_index(op.f('ix_analysis_reports_status'), 'analysis_reports', ['status'], unique=False)


def downgrade():
    op.drop_index(op.f('ix_analysis_reports_status'), table_name='analysis_reports')
    op.drop_index(op.f('ix_analysis_reports_id'), table_name='analysis_reports')
    op.drop_table('analysis_reports')
    report_status.drop(op.get_bind(), checkfirst=True)
