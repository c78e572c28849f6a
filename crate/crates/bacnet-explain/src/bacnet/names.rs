//! Name tables for the protocol enumerations the decoder and renderer use.
//!
//! Generated from the standard's enumeration clauses. Codes absent from a
//! table render as `unknown (N)` instead of failing: captures in the wild
//! carry vendor-proprietary values.

/// Object type codes 0..=62. Index = code.
const OBJECT_TYPES: &[&str] = &[
    "analog-input",
    "analog-output",
    "analog-value",
    "binary-input",
    "binary-output",
    "binary-value",
    "calendar",
    "command",
    "device",
    "event-enrollment",
    "file",
    "group",
    "loop",
    "multi-state-input",
    "multi-state-output",
    "notification-class",
    "program",
    "schedule",
    "averaging",
    "multi-state-value",
    "trend-log",
    "life-safety-point",
    "life-safety-zone",
    "accumulator",
    "pulse-converter",
    "event-log",
    "global-group",
    "trend-log-multiple",
    "load-control",
    "structured-view",
    "access-door",
    "timer",
    "access-credential",
    "access-point",
    "access-rights",
    "access-user",
    "access-zone",
    "credential-data-input",
    "network-security",
    "bitstring-value",
    "characterstring-value",
    "datepattern-value",
    "date-value",
    "datetimepattern-value",
    "datetime-value",
    "integer-value",
    "large-analog-value",
    "octetstring-value",
    "positive-integer-value",
    "timepattern-value",
    "time-value",
    "notification-forwarder",
    "alert-enrollment",
    "channel",
    "lighting-output",
    "binary-lighting-output",
    "network-port",
    "elevator-group",
    "escalator",
    "lift",
    "staging",
    "audit-log",
    "audit-reporter",
];

/// Human name of an object type code, or `unknown-type-N` for codes outside
/// the table.
pub fn object_type_name(code: u16) -> String {
    OBJECT_TYPES
        .get(usize::from(code))
        .map(|s| (*s).to_string())
        .unwrap_or_else(|| format!("unknown-type-{code}"))
}

/// Numeric code of an object type name, if it is in the table.
pub fn object_type_code(name: &str) -> Option<u16> {
    OBJECT_TYPES
        .iter()
        .position(|s| *s == name)
        .map(|p| p as u16)
}

/// Confirmed service choices 0..=29. Index = code.
const CONFIRMED_SERVICES: &[&str] = &[
    "acknowledgeAlarm",
    "confirmedCOVNotification",
    "confirmedEventNotification",
    "getAlarmSummary",
    "getEnrollmentSummary",
    "subscribeCOV",
    "atomicReadFile",
    "atomicWriteFile",
    "addListElement",
    "removeListElement",
    "createObject",
    "deleteObject",
    "readProperty",
    "readPropertyConditional",
    "readPropertyMultiple",
    "writeProperty",
    "writePropertyMultiple",
    "deviceCommunicationControl",
    "confirmedPrivateTransfer",
    "confirmedTextMessage",
    "reinitializeDevice",
    "vtOpen",
    "vtClose",
    "vtData",
    "authenticate",
    "requestKey",
    "readRange",
    "lifeSafetyOperation",
    "subscribeCOVProperty",
    "getEventInformation",
];

/// Unconfirmed service choices 0..=10. Index = code.
const UNCONFIRMED_SERVICES: &[&str] = &[
    "iAm",
    "iHave",
    "unconfirmedCOVNotification",
    "unconfirmedEventNotification",
    "unconfirmedPrivateTransfer",
    "unconfirmedTextMessage",
    "timeSynchronization",
    "whoHas",
    "whoIs",
    "utcTimeSynchronization",
    "writeGroup",
];

/// Whether a service code belongs to the confirmed or unconfirmed choice set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServiceClass {
    Confirmed,
    Unconfirmed,
}

impl ServiceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceClass::Confirmed => "confirmed",
            ServiceClass::Unconfirmed => "unconfirmed",
        }
    }
}

/// Name of a service choice, or `unknown` for codes outside the table.
pub fn service_name(class: ServiceClass, code: u8) -> Option<&'static str> {
    let table = match class {
        ServiceClass::Confirmed => CONFIRMED_SERVICES,
        ServiceClass::Unconfirmed => UNCONFIRMED_SERVICES,
    };
    table.get(usize::from(code)).copied()
}

/// Property identifiers that commonly appear in building-automation traffic.
/// Codes missing here render as `unknown (N)`.
const PROPERTIES: &[(u32, &str)] = &[
    (0, "acked-transitions"),
    (1, "ack-required"),
    (2, "action"),
    (3, "action-text"),
    (4, "active-text"),
    (5, "active-vt-sessions"),
    (6, "alarm-value"),
    (7, "alarm-values"),
    (8, "all"),
    (9, "all-writes-successful"),
    (10, "apdu-segment-timeout"),
    (11, "apdu-timeout"),
    (12, "application-software-version"),
    (13, "archive"),
    (14, "bias"),
    (15, "change-of-state-count"),
    (16, "change-of-state-time"),
    (17, "notification-class"),
    (19, "controlled-variable-reference"),
    (20, "controlled-variable-units"),
    (21, "controlled-variable-value"),
    (22, "cov-increment"),
    (23, "date-list"),
    (24, "daylight-savings-status"),
    (25, "deadband"),
    (26, "derivative-constant"),
    (27, "derivative-constant-units"),
    (28, "description"),
    (29, "description-of-halt"),
    (30, "device-address-binding"),
    (31, "device-type"),
    (32, "effective-period"),
    (33, "elapsed-active-time"),
    (34, "error-limit"),
    (35, "event-enable"),
    (36, "event-state"),
    (37, "event-type"),
    (38, "exception-schedule"),
    (39, "fault-values"),
    (40, "feedback-value"),
    (41, "file-access-method"),
    (42, "file-size"),
    (43, "file-type"),
    (44, "firmware-revision"),
    (45, "high-limit"),
    (46, "inactive-text"),
    (47, "in-process"),
    (48, "instance-of"),
    (49, "integral-constant"),
    (50, "integral-constant-units"),
    (51, "issue-confirmed-notifications"),
    (52, "limit-enable"),
    (53, "list-of-group-members"),
    (54, "list-of-object-property-references"),
    (56, "local-date"),
    (57, "local-time"),
    (58, "location"),
    (59, "low-limit"),
    (60, "manipulated-variable-reference"),
    (61, "maximum-output"),
    (62, "max-apdu-length-accepted"),
    (63, "max-info-frames"),
    (64, "max-master"),
    (65, "max-pres-value"),
    (66, "minimum-off-time"),
    (67, "minimum-on-time"),
    (68, "minimum-output"),
    (69, "min-pres-value"),
    (70, "model-name"),
    (71, "modification-date"),
    (72, "notify-type"),
    (73, "number-of-apdu-retries"),
    (74, "number-of-states"),
    (75, "object-identifier"),
    (76, "object-list"),
    (77, "object-name"),
    (78, "object-property-reference"),
    (79, "object-type"),
    (80, "optional"),
    (81, "out-of-service"),
    (82, "output-units"),
    (83, "event-parameters"),
    (84, "polarity"),
    (85, "present-value"),
    (86, "priority"),
    (87, "priority-array"),
    (88, "priority-for-writing"),
    (89, "process-identifier"),
    (90, "program-change"),
    (91, "program-location"),
    (92, "program-state"),
    (93, "proportional-constant"),
    (94, "proportional-constant-units"),
    (96, "protocol-object-types-supported"),
    (97, "protocol-services-supported"),
    (98, "protocol-version"),
    (99, "read-only"),
    (100, "reason-for-halt"),
    (102, "recipient-list"),
    (103, "reliability"),
    (104, "relinquish-default"),
    (105, "required"),
    (106, "resolution"),
    (107, "segmentation-supported"),
    (108, "setpoint"),
    (109, "setpoint-reference"),
    (110, "state-text"),
    (111, "status-flags"),
    (112, "system-status"),
    (113, "time-delay"),
    (114, "time-of-active-time-reset"),
    (115, "time-of-state-count-reset"),
    (116, "time-synchronization-recipients"),
    (117, "units"),
    (118, "update-interval"),
    (119, "utc-offset"),
    (120, "vendor-identifier"),
    (121, "vendor-name"),
    (122, "vt-classes-supported"),
    (123, "weekly-schedule"),
    (124, "attempted-samples"),
    (125, "average-value"),
    (126, "buffer-size"),
    (127, "client-cov-increment"),
    (128, "cov-resubscription-interval"),
    (130, "event-time-stamps"),
    (131, "log-buffer"),
    (132, "log-device-object-property"),
    (133, "enable"),
    (134, "log-interval"),
    (135, "maximum-value"),
    (136, "minimum-value"),
    (137, "notification-threshold"),
    (140, "protocol-revision"),
    (141, "records-since-notification"),
    (142, "record-count"),
    (143, "start-time"),
    (144, "stop-time"),
    (145, "stop-when-full"),
    (146, "total-record-count"),
    (147, "valid-samples"),
    (148, "window-interval"),
    (149, "window-samples"),
    (150, "maximum-value-timestamp"),
    (151, "minimum-value-timestamp"),
    (152, "variance-value"),
    (153, "active-cov-subscriptions"),
    (154, "backup-failure-timeout"),
    (155, "configuration-files"),
    (156, "database-revision"),
    (157, "direct-reading"),
    (158, "last-restore-time"),
    (159, "maintenance-required"),
    (160, "member-of"),
    (161, "mode"),
    (162, "operation-expected"),
    (163, "setting"),
    (164, "silenced"),
    (165, "tracking-value"),
    (166, "zone-members"),
    (167, "life-safety-alarm-values"),
    (168, "max-segments-accepted"),
    (169, "profile-name"),
];

/// Name of a property identifier, if it is in the table.
pub fn property_name(code: u32) -> Option<&'static str> {
    PROPERTIES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, name)| *name)
}

/// Error class codes 0..=7. Index = code.
const ERROR_CLASSES: &[&str] = &[
    "device",
    "object",
    "property",
    "resources",
    "security",
    "services",
    "vt",
    "communication",
];

pub fn error_class_name(code: u32) -> Option<&'static str> {
    usize::try_from(code)
        .ok()
        .and_then(|c| ERROR_CLASSES.get(c))
        .copied()
}

/// Error codes that come up in practice. Codes missing here render as
/// `unknown (N)`.
const ERROR_CODES: &[(u32, &str)] = &[
    (0, "other"),
    (2, "configuration-in-progress"),
    (3, "device-busy"),
    (4, "dynamic-creation-not-supported"),
    (5, "file-access-denied"),
    (7, "inconsistent-parameters"),
    (8, "inconsistent-selection-criterion"),
    (9, "invalid-data-type"),
    (10, "invalid-file-access-method"),
    (11, "invalid-file-start-position"),
    (13, "invalid-parameter-data-type"),
    (14, "invalid-time-stamp"),
    (16, "missing-required-parameter"),
    (17, "no-objects-of-specified-type"),
    (18, "no-space-for-object"),
    (19, "no-space-to-add-list-element"),
    (20, "no-space-to-write-property"),
    (21, "no-vt-sessions-available"),
    (22, "property-is-not-a-list"),
    (23, "object-deletion-not-permitted"),
    (24, "object-identifier-already-exists"),
    (25, "operational-problem"),
    (26, "password-failure"),
    (27, "read-access-denied"),
    (29, "service-request-denied"),
    (30, "timeout"),
    (31, "unknown-object"),
    (32, "unknown-property"),
    (34, "unknown-vt-class"),
    (35, "unknown-vt-session"),
    (36, "unsupported-object-type"),
    (37, "value-out-of-range"),
    (38, "vt-session-already-closed"),
    (39, "vt-session-termination-failure"),
    (40, "write-access-denied"),
    (41, "character-set-not-supported"),
    (42, "invalid-array-index"),
    (43, "cov-subscription-failed"),
    (44, "not-cov-property"),
    (45, "optional-functionality-not-supported"),
    (46, "invalid-configuration-data"),
    (47, "datatype-not-supported"),
    (48, "duplicate-name"),
    (49, "duplicate-object-id"),
    (50, "property-is-not-an-array"),
];

pub fn error_code_name(code: u32) -> Option<&'static str> {
    ERROR_CODES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, name)| *name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_type_table_round_trips() {
        assert_eq!(object_type_name(1), "analog-output");
        assert_eq!(object_type_name(8), "device");
        assert_eq!(object_type_code("analog-output"), Some(1));
        assert_eq!(object_type_code("device"), Some(8));
        assert_eq!(object_type_name(999), "unknown-type-999");
        assert_eq!(object_type_code("no-such-type"), None);
    }

    #[test]
    fn service_names_match_the_standard_codes() {
        assert_eq!(service_name(ServiceClass::Confirmed, 15), Some("writeProperty"));
        assert_eq!(
            service_name(ServiceClass::Confirmed, 16),
            Some("writePropertyMultiple")
        );
        assert_eq!(service_name(ServiceClass::Confirmed, 12), Some("readProperty"));
        assert_eq!(service_name(ServiceClass::Unconfirmed, 8), Some("whoIs"));
        assert_eq!(service_name(ServiceClass::Confirmed, 77), None);
    }

    #[test]
    fn property_and_error_tables_cover_the_common_codes() {
        assert_eq!(property_name(85), Some("present-value"));
        assert_eq!(property_name(76), Some("object-list"));
        assert_eq!(error_class_name(2), Some("property"));
        assert_eq!(error_code_name(40), Some("write-access-denied"));
        assert_eq!(property_name(5000), None);
    }
}
