//! Per-workspace state owned by the server: the workspace itself, its
//! ordered task queue and the scheduled-reporter run.

use std::collections::VecDeque;
use std::sync::{Mutex, MutexGuard};

use crate::cmdlang::{self, Command, Flow, Reporter};
use crate::engine::{EngineError, Workspace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    Complete,
    StoppedEarly,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleSpec {
    pub reporters: Vec<String>,
    pub start_at_tick: u64,
    pub interval_ticks: u64,
    /// `None` runs until the model stops.
    pub stop_at_tick: Option<u64>,
    pub go_command: String,
}

#[derive(Debug)]
pub struct ScheduledRun {
    reporters: Vec<Reporter>,
    go: Vec<Command>,
    start: u64,
    interval: u64,
    stop_at: Option<u64>,
    started: bool,
    last_sampled: Option<u64>,
    pub rows: Vec<Vec<String>>,
    pub status: RunStatus,
    drained: bool,
}

impl ScheduledRun {
    pub fn new(spec: &ScheduleSpec) -> Result<Self, cmdlang::ParseError> {
        let reporters = spec
            .reporters
            .iter()
            .map(|r| cmdlang::parse_reporter(r))
            .collect::<Result<_, _>>()?;
        Ok(ScheduledRun {
            reporters,
            go: cmdlang::parse_program(&spec.go_command)?,
            start: spec.start_at_tick,
            interval: spec.interval_ticks.max(1),
            stop_at: spec.stop_at_tick,
            started: false,
            last_sampled: None,
            rows: Vec::new(),
            status: RunStatus::Running,
            drained: false,
        })
    }

    pub fn is_running(&self) -> bool {
        self.status == RunStatus::Running
    }

    fn due(&self, tick: u64) -> bool {
        tick >= self.start
            && (tick - self.start).is_multiple_of(self.interval)
            && self.stop_at.is_none_or(|s| tick <= s)
            && self.last_sampled != Some(tick)
    }

    fn sample(&mut self, ws: &Workspace) -> Result<(), EngineError> {
        let tick = ws.ticks()?;
        if self.due(tick) {
            let row = self
                .reporters
                .iter()
                .map(|r| cmdlang::evaluate(ws, r))
                .collect::<Result<Vec<_>, _>>()?;
            self.rows.push(row);
            self.last_sampled = Some(tick);
        }
        Ok(())
    }

    fn reached_stop(&self, ws: &Workspace) -> Result<bool, EngineError> {
        let tick = ws.ticks()?;
        Ok(self.stop_at.is_some_and(|s| tick >= s))
    }

    /// Advances the run by one go. Returns true once the run has finished.
    fn advance(&mut self, ws: &mut Workspace) -> bool {
        match self.advance_inner(ws) {
            Ok(true) => {
                self.status = RunStatus::Complete;
                true
            }
            Ok(false) => false,
            Err(e) => {
                self.status = RunStatus::Failed(e.to_string());
                true
            }
        }
    }

    fn advance_inner(&mut self, ws: &mut Workspace) -> Result<bool, EngineError> {
        if !self.started {
            self.started = true;
            self.sample(ws)?;
            if self.reached_stop(ws)? {
                return Ok(true);
            }
        }
        let flow = cmdlang::execute_program(ws, &self.go)?;
        self.sample(ws)?;
        Ok(flow != Flow::Continue || self.reached_stop(ws)?)
    }

    pub fn abort(&mut self) {
        if self.is_running() {
            self.status = RunStatus::StoppedEarly;
        }
    }

    /// Returns the buffered rows once, after the run has ended.
    pub fn drain(&mut self) -> Result<Vec<Vec<String>>, String> {
        if self.is_running() || self.drained {
            return Ok(Vec::new());
        }
        self.drained = true;
        if let RunStatus::Failed(msg) = &self.status {
            return Err(msg.clone());
        }
        Ok(std::mem::take(&mut self.rows))
    }
}

#[derive(Debug)]
pub enum Task {
    Program {
        commands: Vec<Command>,
        index: usize,
        repeats_done: u64,
    },
    Scheduled,
    SetParamsRandom,
}

impl Task {
    pub fn program(commands: Vec<Command>) -> Self {
        Task::Program {
            commands,
            index: 0,
            repeats_done: 0,
        }
    }
}

#[derive(Debug)]
pub struct SlotState {
    pub workspace: Workspace,
    pub queue: VecDeque<Task>,
    pub scheduled: Option<ScheduledRun>,
    pub on_worker: bool,
    pub deleted: bool,
    pub last_error: Option<String>,
}

impl SlotState {
    pub fn is_idle(&self) -> bool {
        self.queue.is_empty() && !self.on_worker
    }

    /// Drops queued work and ends any scheduled run at the current tick.
    pub fn abort(&mut self) {
        self.queue.clear();
        if let Some(run) = self.scheduled.as_mut() {
            run.abort();
        }
    }

    /// Executes one unit of the front task: one repeat iteration, one
    /// command, or one go of a scheduled run. Returns true when the front
    /// task is finished.
    pub fn run_unit(&mut self) -> bool {
        let SlotState {
            workspace,
            queue,
            scheduled,
            last_error,
            ..
        } = self;
        let Some(task) = queue.front_mut() else {
            return true;
        };
        match task {
            Task::Scheduled => match scheduled.as_mut() {
                Some(run) if run.is_running() => run.advance(workspace),
                _ => true,
            },
            Task::SetParamsRandom => {
                if let Err(e) = workspace.set_params_random() {
                    *last_error = Some(e.to_string());
                }
                true
            }
            Task::Program {
                commands,
                index,
                repeats_done,
            } => {
                let Some(cmd) = commands.get(*index) else {
                    return true;
                };
                let result = match cmd {
                    Command::Repeat(count, body) => {
                        if *repeats_done >= *count {
                            *index += 1;
                            *repeats_done = 0;
                            Ok(Flow::Continue)
                        } else {
                            *repeats_done += 1;
                            cmdlang::execute_block(workspace, body).inspect(|flow| {
                                if *flow == Flow::ModelStopped {
                                    *index += 1;
                                    *repeats_done = 0;
                                }
                            })
                        }
                    }
                    other => cmdlang::execute(workspace, other).inspect(|_| *index += 1),
                };
                match result {
                    Ok(Flow::Stop) => true,
                    Ok(_) => *index >= commands.len(),
                    Err(e) => {
                        *last_error = Some(e.to_string());
                        true
                    }
                }
            }
        }
    }
}

#[derive(Debug)]
pub struct Slot {
    pub id: u64,
    state: Mutex<SlotState>,
}

impl Slot {
    pub fn new(id: u64) -> Self {
        Slot {
            id,
            state: Mutex::new(SlotState {
                workspace: Workspace::new(id as i64),
                queue: VecDeque::new(),
                scheduled: None,
                on_worker: false,
                deleted: false,
                last_error: None,
            }),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, SlotState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot_with_wsp(cmds: &str) -> SlotState {
        let slot = Slot::new(0);
        let mut st = slot.state.into_inner().unwrap();
        st.workspace.open_model("wolf-sheep-predation").unwrap();
        let program = cmdlang::parse_program(cmds).unwrap();
        cmdlang::execute_program(&mut st.workspace, &program).unwrap();
        st
    }

    fn spec(stop: Option<u64>) -> ScheduleSpec {
        ScheduleSpec {
            reporters: vec!["ticks".into(), "count sheep".into(), "count wolves".into()],
            start_at_tick: 0,
            interval_ticks: 1,
            stop_at_tick: stop,
            go_command: "go".into(),
        }
    }

    fn run_to_end(st: &mut SlotState) {
        while !st.queue.is_empty() {
            if st.run_unit() {
                st.queue.pop_front();
            }
        }
    }

    #[test]
    fn rows_cover_ticks_inclusive() {
        let mut st = slot_with_wsp("random-seed 1 setup");
        st.scheduled = Some(ScheduledRun::new(&spec(Some(100))).unwrap());
        st.queue.push_back(Task::Scheduled);
        run_to_end(&mut st);
        let run = st.scheduled.as_mut().unwrap();
        assert_eq!(run.status, RunStatus::Complete);
        let rows = run.drain().unwrap();
        assert_eq!(rows.len(), 101);
        for (t, row) in rows.iter().enumerate() {
            assert_eq!(row[0], t.to_string());
            assert_eq!(row.len(), 3);
        }
        assert!(run.drain().unwrap().is_empty());
    }

    #[test]
    fn stop_at_zero_is_single_snapshot() {
        let mut st = slot_with_wsp("setup");
        st.scheduled = Some(ScheduledRun::new(&spec(Some(0))).unwrap());
        st.queue.push_back(Task::Scheduled);
        run_to_end(&mut st);
        assert_eq!(st.scheduled.as_mut().unwrap().drain().unwrap().len(), 1);
        assert_eq!(st.workspace.ticks().unwrap(), 0);
    }

    #[test]
    fn interval_and_start_offsets() {
        let mut st = slot_with_wsp("setup");
        let mut s = spec(Some(20));
        s.start_at_tick = 3;
        s.interval_ticks = 5;
        st.scheduled = Some(ScheduledRun::new(&s).unwrap());
        st.queue.push_back(Task::Scheduled);
        run_to_end(&mut st);
        let ticks: Vec<String> = st
            .scheduled
            .as_mut()
            .unwrap()
            .drain()
            .unwrap()
            .into_iter()
            .map(|r| r[0].clone())
            .collect();
        assert_eq!(ticks, ["3", "8", "13", "18"]);
    }

    #[test]
    fn extinct_world_records_until_stop() {
        let mut st = slot_with_wsp("set initial-number-sheep 0 set initial-number-wolves 0 setup");
        st.scheduled = Some(ScheduledRun::new(&spec(None)).unwrap());
        st.queue.push_back(Task::Scheduled);
        run_to_end(&mut st);
        let rows = st.scheduled.as_mut().unwrap().drain().unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn failed_run_reports_error_once() {
        let mut st = slot_with_wsp("setup");
        let mut s = spec(Some(5));
        s.reporters.push("burned-trees".into());
        st.scheduled = Some(ScheduledRun::new(&s).unwrap());
        st.queue.push_back(Task::Scheduled);
        run_to_end(&mut st);
        let run = st.scheduled.as_mut().unwrap();
        assert!(matches!(run.status, RunStatus::Failed(_)));
        assert!(run.drain().unwrap_err().contains("burned-trees"));
        assert!(run.drain().unwrap().is_empty());
    }

    #[test]
    fn program_task_runs_repeat_iterations_as_units() {
        let mut st = slot_with_wsp("setup");
        st.queue
            .push_back(Task::program(cmdlang::parse_program("repeat 5 [go] go").unwrap()));
        let mut units = 0;
        while !st.queue.is_empty() {
            units += 1;
            if st.run_unit() {
                st.queue.pop_front();
            }
        }
        assert_eq!(st.workspace.ticks().unwrap(), 6);
        assert!(units >= 6);
    }

    #[test]
    fn abort_marks_run_stopped_early() {
        let mut st = slot_with_wsp("setup");
        st.scheduled = Some(ScheduledRun::new(&spec(Some(50))).unwrap());
        st.queue.push_back(Task::Scheduled);
        for _ in 0..10 {
            st.run_unit();
        }
        st.abort();
        assert!(st.queue.is_empty());
        let run = st.scheduled.as_mut().unwrap();
        assert_eq!(run.status, RunStatus::StoppedEarly);
        assert_eq!(run.drain().unwrap().len(), 11);
    }
}
