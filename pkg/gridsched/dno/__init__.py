from gridsched.dno.economics import RebateVector, dno_profit, realtime_cost, rebates
from gridsched.dno.projection import project_box_halfspace, project_halfspaces
from gridsched.dno.subproblem import DnoIterate, FairnessTerms, dno_objective, dno_update

__all__ = [
    "RebateVector",
    "dno_profit",
    "realtime_cost",
    "rebates",
    "project_box_halfspace",
    "project_halfspaces",
    "DnoIterate",
    "FairnessTerms",
    "dno_objective",
    "dno_update",
]
