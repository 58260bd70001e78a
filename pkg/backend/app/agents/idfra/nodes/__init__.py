from .execute import execute_node
from .judge import judge, judge_node
from .persist import continue_router, persist_node
from .planning import (carry_forward_node, initial_plan, initial_plan_node, order, order_node, position,
                       position_node, position_router, replan, replan_node, replan_router)

__all__ = [
    "execute_node",
    "judge",
    "judge_node",
    "continue_router",
    "persist_node",
    "carry_forward_node",
    "initial_plan",
    "initial_plan_node",
    "order",
    "order_node",
    "position",
    "position_node",
    "position_router",
    "replan",
    "replan_node",
    "replan_router",
]
