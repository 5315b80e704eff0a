from sqlalchemy import Column, Integer, String, Float, DateTime, Text
from sqlalchemy.sql import func
from database import Base

class RunRecord(Base):
    __tablename__ = "run_records"
    
    id = Column(Integer, primary_key=True, index=True)
    kind = Column(String, index=True)  # "not-gate", "triplet", "sweep:dt", ...
    engine = Column(String)
    status = Column(String)  # "ok", "not-reached", an error code
    exit_status = Column(Integer, default=0)
    config_json = Column(Text)  # normalized scenario config
    terminal_fidelity = Column(Float, nullable=True)
    max_energy = Column(Float, nullable=True)
    survival = Column(Float, nullable=True)
    message = Column(String, nullable=True)
    created_at = Column(DateTime, default=func.now())
