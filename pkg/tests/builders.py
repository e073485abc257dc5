# SPDX-FileCopyrightText: (C) 2026 rowdrive contributors
# SPDX-License-Identifier: Apache-2.0

"""Hand-built worlds and episode logs shared by the tests."""

from rowdrive.reward import RewardBreakdown
from rowdrive.world import (
  EpisodeLog,
  Outcome,
  ScenarioConfig,
  TickRecord,
  VehicleState,
)


def scenario(**kw):
  kw.setdefault("density", 0.0)
  kw.setdefault("max_ticks", 50)
  return ScenarioConfig(**kw)


def car(vid, x, lane=1, v=10.0, config=None, **kw):
  config = config or ScenarioConfig()
  return VehicleState(
    id=vid, x=x, y=config.lane_center(lane), v_x=v, v_y=0.0,
    lane_index=lane, **kw,
  )  # fmt: skip


def episode_log(frames, config=None, outcome=Outcome.SAFE_ARRIVED, **kw):
  """frames: list of vehicle tuples, one per tick. kw carries per-tick
  lists for events, violations and reward."""
  config = config or scenario(max_ticks=max(len(frames), 1))
  ticks = []
  for k, vehicles in enumerate(frames):
    ticks.append(
      TickRecord(
        tick=k + 1,
        vehicles=tuple(vehicles),
        reward=kw.get("reward", [RewardBreakdown()] * len(frames))[k],
        violations=tuple(kw.get("violations", [()] * len(frames))[k]),
        events=tuple(kw.get("events", [()] * len(frames))[k]),
      )
    )
  return EpisodeLog(scenario=config, ticks=tuple(ticks), outcome=outcome)
